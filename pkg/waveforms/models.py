from django.db import models
from django.utils import timezone


class DatasetKind(models.TextChoices):
    DATASET1 = "1", "Dataset 1 (entraînement)"
    DATASET2 = "2", "Dataset 2 (balayage RSB)"
    TOY = "toy", "Jouet 4 classes"
    TOY_SWEEP = "toy-sweep", "Jouet, balayage RSB"


class DatasetRecordManager(models.Manager):

    def record_dataset(self, dataset, path, scale=1.0):
        """Catalogue (ou met à jour) un dataset écrit sur disque."""
        manifest = dataset.manifest
        record, _ = self.update_or_create(
            path=str(path),
            defaults={
                "name": manifest.name,
                "kind": manifest.kind,
                "seed": manifest.seed,
                "scale": scale,
                "num_samples": manifest.num_samples,
                "frame_len": manifest.frame_len,
                "sample_rate_hz": manifest.sample_rate_hz,
            },
        )
        return record


class DatasetRecord(models.Model):
    name = models.CharField(max_length=100)
    kind = models.CharField(max_length=20, choices=DatasetKind.choices)
    path = models.CharField(max_length=500, unique=True)
    seed = models.BigIntegerField(null=True, blank=True)
    scale = models.FloatField(default=1.0)
    num_samples = models.PositiveIntegerField()
    frame_len = models.PositiveIntegerField()
    sample_rate_hz = models.FloatField()
    created_at = models.DateTimeField(default=timezone.now)

    objects = DatasetRecordManager()

    class Meta:
        ordering = ["-created_at"]

    def __str__(self):
        return f"{self.name} ({self.num_samples} échantillons)"
