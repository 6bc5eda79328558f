# waveforms/views.py

from rest_framework.viewsets import ReadOnlyModelViewSet
from rest_framework.permissions import IsAuthenticated

from drf_spectacular.utils import extend_schema

from waveforms.models import DatasetRecord
from waveforms.serializers import DatasetRecordSerializer


@extend_schema(
    tags=["Datasets"],
    description="Catalogue des datasets générés par la commande gen.",
)
class DatasetRecordViewSet(ReadOnlyModelViewSet):
    queryset = DatasetRecord.objects.all()
    serializer_class = DatasetRecordSerializer
    permission_classes = [IsAuthenticated]

    def get_queryset(self):
        queryset = super().get_queryset()
        kind = self.request.query_params.get("kind")
        if kind:
            queryset = queryset.filter(kind=kind)
        return queryset
