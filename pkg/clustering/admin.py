from django.contrib import admin
from clustering.models import MetricRecord, ThresholdRecord, TrainingRun


class MetricRecordInline(admin.TabularInline):
    model = MetricRecord
    extra = 0
    fields = ("stage", "dataset", "snr_db", "acc", "nmi", "ari", "purity")
    readonly_fields = fields


@admin.register(TrainingRun)
class TrainingRunAdmin(admin.ModelAdmin):
    list_display = (
        "id",
        "name",
        "seed",
        "status",
        "last_stage",
        "output_dir",
        "created_at",
    )
    list_filter = ("status",)
    search_fields = ("name", "output_dir")
    ordering = ("-created_at",)
    inlines = [MetricRecordInline]


@admin.register(MetricRecord)
class MetricRecordAdmin(admin.ModelAdmin):
    list_display = ("id", "run", "stage", "dataset", "snr_db", "acc", "nmi", "ari", "purity")
    list_filter = ("stage", "dataset")
    search_fields = ("run__name", "dataset")


@admin.register(ThresholdRecord)
class ThresholdRecordAdmin(admin.ModelAdmin):
    list_display = ("id", "run", "epoch", "class_id", "threshold", "confident_fraction")
    list_filter = ("class_id",)
    search_fields = ("run__name",)
