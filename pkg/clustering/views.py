# clustering/views.py

from rest_framework.decorators import action
from rest_framework.mixins import DestroyModelMixin, ListModelMixin, RetrieveModelMixin
from rest_framework.permissions import IsAdminUser, IsAuthenticated
from rest_framework.response import Response
from rest_framework.viewsets import GenericViewSet

from drf_spectacular.utils import OpenApiParameter, extend_schema

from clustering.models import TrainingRun
from clustering.serializers import (
    MetricRecordSerializer,
    ThresholdRecordSerializer,
    TrainingRunSerializer,
)


@extend_schema(
    tags=["Entraînements"],
    description="Entraînements lancés par la commande train, avec leurs métriques et seuils.",
)
class TrainingRunViewSet(ListModelMixin, RetrieveModelMixin, DestroyModelMixin, GenericViewSet):
    queryset = TrainingRun.objects.all()
    serializer_class = TrainingRunSerializer

    def get_permissions(self):
        # Seul le personnel peut supprimer un entraînement
        if self.action == "destroy":
            return [IsAdminUser()]
        return [IsAuthenticated()]

    def get_queryset(self):
        queryset = super().get_queryset()
        status = self.request.query_params.get("status")
        if status:
            queryset = queryset.filter(status=status)
        return queryset

    @extend_schema(
        responses=MetricRecordSerializer(many=True),
        parameters=[OpenApiParameter("stage", int, description="Filtre par étape (1, 2 ou 3)")],
    )
    @action(detail=True, methods=["get"])
    def metrics(self, request, pk=None):
        records = self.get_object().metrics.all()
        stage = request.query_params.get("stage")
        if stage:
            records = records.filter(stage=stage)
        return Response(MetricRecordSerializer(records, many=True).data)

    @extend_schema(responses=ThresholdRecordSerializer(many=True))
    @action(detail=True, methods=["get"])
    def thresholds(self, request, pk=None):
        return Response(ThresholdRecordSerializer(self.get_object().thresholds.all(), many=True).data)
