# waveforms/serializers.py

from rest_framework.serializers import (
    ChoiceField,
    FloatField,
    CharField,
    IntegerField,
    ModelSerializer,
    Serializer,
)
from rest_framework.exceptions import ValidationError

from waveforms.models import DatasetRecord
from waveforms.synth import ChannelKind, WaveformClass


class SampleRecordSerializer(Serializer):
    class_id = IntegerField(min_value=min(WaveformClass.values), max_value=max(WaveformClass.values))
    snr_db = FloatField()
    channel_kind = ChoiceField(choices=ChannelKind.choices)
    seed = IntegerField(min_value=0)


class DatasetManifestSerializer(Serializer):
    """Sidecar JSON d'un dataset : validé à la lecture, produit à l'écriture."""

    name = CharField(max_length=100)
    kind = CharField(max_length=20, required=False, allow_blank=True, default="")
    seed = IntegerField(required=False, allow_null=True, default=None)
    num_samples = IntegerField(min_value=0)
    frame_len = IntegerField(min_value=1)
    sample_rate_hz = FloatField(min_value=1.0)
    records = SampleRecordSerializer(many=True)

    def validate(self, attrs):
        if len(attrs["records"]) != attrs["num_samples"]:
            raise ValidationError(
                {"records": f"{len(attrs['records'])} enregistrements pour num_samples={attrs['num_samples']}"}
            )
        return attrs

    def create(self, validated_data):
        # Import local : datasets importe ce module
        from waveforms.datasets import DatasetManifest, SampleRecord

        records = tuple(SampleRecord(**record) for record in validated_data.pop("records"))
        return DatasetManifest(records=records, **validated_data)


class DatasetRecordSerializer(ModelSerializer):
    class Meta:
        model = DatasetRecord
        fields = [
            "id",
            "name",
            "kind",
            "path",
            "seed",
            "scale",
            "num_samples",
            "frame_len",
            "sample_rate_hz",
            "created_at",
        ]
        read_only_fields = fields
