from django.contrib import admin
from waveforms.models import DatasetRecord


@admin.register(DatasetRecord)
class DatasetRecordAdmin(admin.ModelAdmin):
    list_display = (
        "id",
        "name",
        "kind",
        "num_samples",
        "frame_len",
        "seed",
        "scale",
        "created_at",
    )
    list_filter = ("kind",)
    search_fields = ("name", "path")
    ordering = ("-created_at",)
