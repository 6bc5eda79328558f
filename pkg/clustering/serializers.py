# clustering/serializers.py

from pathlib import Path

import yaml
from attrs import evolve
from rest_framework.exceptions import ValidationError
from rest_framework.serializers import (
    CharField,
    ChoiceField,
    FloatField,
    IntegerField,
    ListField,
    ModelSerializer,
    Serializer,
)

from clustering.exceptions import ConfigurationError
from clustering.losses import Reduction
from clustering.models import MetricRecord, ThresholdRecord, TrainingRun
from clustering.optim import OptimizerKind
from clustering.pipeline import PairMode, desk_config, full_config
from waveforms.augmentation import StrengthTier
from waveforms.models import DatasetKind


# -----------------
# Fichier de configuration (YAML)
# -----------------

class EncoderConfigSerializer(Serializer):
    channels = ListField(child=IntegerField(min_value=1), min_length=1, required=False)
    kernels = ListField(child=IntegerField(min_value=1), min_length=1, required=False)
    pool_window = IntegerField(min_value=1, required=False)
    num_layers = IntegerField(min_value=0, required=False)
    num_heads = IntegerField(min_value=1, required=False)
    ffn_dim = IntegerField(min_value=1, required=False)
    feature_dim = IntegerField(min_value=1, required=False)
    scale = IntegerField(min_value=1, required=False)

    def validate(self, attrs):
        channels, kernels = attrs.get("channels"), attrs.get("kernels")
        if channels is not None and kernels is not None and len(channels) != len(kernels):
            raise ValidationError({"kernels": "Autant de noyaux que de blocs convolutifs sont requis."})
        return attrs


class _StageSerializer(Serializer):
    optimizer = ChoiceField(choices=OptimizerKind.choices, required=False)
    lr = FloatField(min_value=0.0, required=False)
    momentum = FloatField(min_value=0.0, max_value=1.0, required=False)
    batch_size = IntegerField(min_value=2, required=False)
    max_epochs = IntegerField(min_value=0, required=False)
    patience = IntegerField(min_value=1, required=False)
    min_improvement = FloatField(min_value=0.0, required=False)


class StageOneSerializer(_StageSerializer):
    temperature = FloatField(min_value=1e-6, required=False)
    tier = ChoiceField(choices=StrengthTier.choices, required=False)
    pair_mode = ChoiceField(choices=PairMode.choices, required=False)
    reduction = ChoiceField(choices=Reduction.choices, required=False)


class StageTwoSerializer(_StageSerializer):
    temperature = FloatField(min_value=1e-6, required=False)
    tier = ChoiceField(choices=StrengthTier.choices, required=False)
    num_neighbors = IntegerField(min_value=1, required=False)
    reduction = ChoiceField(choices=Reduction.choices, required=False)


class StageThreeSerializer(_StageSerializer):
    num_neighbors = IntegerField(min_value=1, required=False)
    tau_max = FloatField(min_value=1e-6, required=False)
    threshold_floor = FloatField(min_value=1e-6, required=False)
    unlabeled_weight = FloatField(min_value=0.0, required=False)
    weak_tier = ChoiceField(choices=StrengthTier.choices, required=False)
    strong_tier = ChoiceField(choices=StrengthTier.choices, required=False)

    def validate(self, attrs):
        tau_max, floor = attrs.get("tau_max"), attrs.get("threshold_floor")
        if tau_max is not None and floor is not None and floor > tau_max:
            raise ValidationError({"threshold_floor": "Le plancher doit rester inférieur ou égal à tau_max."})
        return attrs


class RunConfigSerializer(Serializer):
    """Valide un fichier de configuration et le fusionne sur un préréglage (bureau ou complet)."""

    name = CharField(max_length=100, required=False)
    seed = IntegerField(min_value=0, required=False)
    dataset = CharField(max_length=500, required=False, allow_blank=True)
    dataset_kind = ChoiceField(choices=DatasetKind.choices, required=False)
    output_dir = CharField(max_length=500, required=False, allow_blank=True)
    num_clusters = IntegerField(min_value=1, required=False, allow_null=True)
    kmeans_restarts = IntegerField(min_value=1, required=False)
    encoder = EncoderConfigSerializer(required=False)
    stage1 = StageOneSerializer(required=False)
    stage2 = StageTwoSerializer(required=False)
    stage3 = StageThreeSerializer(required=False)

    def create(self, validated_data):
        preset = self.context.get("preset") or desk_config()
        try:
            for key in ("encoder", "stage1", "stage2", "stage3"):
                if key in validated_data:
                    validated_data[key] = evolve(getattr(preset, key), **validated_data[key])
            return evolve(preset, **validated_data)
        except ConfigurationError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"Configuration incohérente : {exc}") from exc


def load_run_config(path=None, full=False, **overrides):
    """Lit un fichier YAML (facultatif), le valide et renvoie un RunConfig.

    Les `overrides` non nuls (graine, sortie...) priment sur le fichier.
    """
    preset = full_config() if full else desk_config()
    data = {}
    if path:
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except OSError as exc:
            raise ConfigurationError(f"Configuration illisible : {path}") from exc
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"YAML invalide dans {path} : {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path} doit contenir un dictionnaire", {"non_field_errors": [type(data).__name__]})

    data.update({key: value for key, value in overrides.items() if value is not None})
    serializer = RunConfigSerializer(data=data, context={"preset": preset})
    if not serializer.is_valid():
        raise ConfigurationError("Configuration invalide", detail=serializer.errors)
    return serializer.save()


# -----------------
# API
# -----------------

class TrainingRunSerializer(ModelSerializer):
    class Meta:
        model = TrainingRun
        fields = [
            "id",
            "name",
            "seed",
            "config",
            "output_dir",
            "status",
            "last_stage",
            "created_at",
            "updated_at",
        ]
        read_only_fields = fields


class MetricRecordSerializer(ModelSerializer):
    class Meta:
        model = MetricRecord
        fields = ["id", "stage", "dataset", "snr_db", "acc", "nmi", "ari", "purity"]
        read_only_fields = fields


class ThresholdRecordSerializer(ModelSerializer):
    class Meta:
        model = ThresholdRecord
        fields = ["id", "epoch", "class_id", "threshold", "confident_fraction"]
        read_only_fields = fields
