from django.db import models
from django.utils import timezone


class TrainingRunManager(models.Manager):

    def start(self, config, output_dir):
        return self.create(
            name=config.name,
            seed=config.seed,
            config=config.as_json(),
            output_dir=str(output_dir),
            status=TrainingRun.Status.RUNNING,
        )


class TrainingRun(models.Model):

    class Status(models.TextChoices):
        RUNNING = "running", "En cours"
        COMPLETED = "completed", "Terminé"
        FAILED = "failed", "Échec"

    name = models.CharField(max_length=100)
    seed = models.BigIntegerField()
    config = models.JSONField(default=dict)
    output_dir = models.CharField(max_length=500)
    status = models.CharField(max_length=20, choices=Status.choices, default=Status.RUNNING)
    last_stage = models.PositiveSmallIntegerField(default=0)
    created_at = models.DateTimeField(default=timezone.now)
    updated_at = models.DateTimeField(auto_now=True)

    objects = TrainingRunManager()

    class Meta:
        ordering = ["-created_at"]

    def __str__(self):
        return f"{self.name} (graine {self.seed}, {self.get_status_display()})"

    def finish(self, last_stage):
        self.status = self.Status.COMPLETED
        self.last_stage = last_stage
        self.save(update_fields=["status", "last_stage", "updated_at"])

    def fail(self):
        self.status = self.Status.FAILED
        self.save(update_fields=["status", "updated_at"])


class MetricRecordManager(models.Manager):

    def record_rows(self, run, rows):
        """Enregistre une ligne par (étape, dataset, RSB) d'un rapport d'évaluation."""
        return self.bulk_create(
            self.model(
                run=run,
                stage=row.stage,
                dataset=row.dataset,
                snr_db=row.snr_db,
                acc=row.acc,
                nmi=row.nmi,
                ari=row.ari,
                purity=row.purity,
            )
            for row in rows
        )


class MetricRecord(models.Model):
    run = models.ForeignKey(TrainingRun, on_delete=models.CASCADE, related_name="metrics")
    stage = models.PositiveSmallIntegerField()
    dataset = models.CharField(max_length=100)
    # Nul : ligne globale
    snr_db = models.FloatField(null=True, blank=True)
    acc = models.FloatField()
    nmi = models.FloatField()
    ari = models.FloatField()
    purity = models.FloatField()
    created_at = models.DateTimeField(default=timezone.now)

    objects = MetricRecordManager()

    class Meta:
        ordering = ["stage", "dataset", "snr_db"]

    def __str__(self):
        return f"Étape {self.stage} / {self.dataset} : ACC {self.acc:.4f}"


class ThresholdRecordManager(models.Manager):

    def record_rows(self, run, rows):
        return self.bulk_create(
            self.model(
                run=run,
                epoch=row.epoch,
                class_id=row.class_id,
                threshold=row.threshold,
                confident_fraction=row.confident_fraction,
            )
            for row in rows
        )


class ThresholdRecord(models.Model):
    run = models.ForeignKey(TrainingRun, on_delete=models.CASCADE, related_name="thresholds")
    epoch = models.PositiveIntegerField()
    class_id = models.PositiveSmallIntegerField()
    threshold = models.FloatField()
    confident_fraction = models.FloatField()

    objects = ThresholdRecordManager()

    class Meta:
        ordering = ["epoch", "class_id"]
