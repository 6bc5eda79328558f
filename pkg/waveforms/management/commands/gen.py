# waveforms/management/commands/gen.py

from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from waveforms.datasets import generate, write_dataset
from waveforms.exceptions import PulseclustError
from waveforms.models import DatasetKind, DatasetRecord


class Command(BaseCommand):
    help = "Génère un dataset radar (1, 2, toy, toy-sweep) et l'écrit sur disque."

    def add_arguments(self, parser):
        parser.add_argument("--dataset", choices=DatasetKind.values, default=DatasetKind.DATASET1)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--scale", type=float, default=1.0)
        parser.add_argument("--out", type=Path, default=None)
        parser.add_argument("--workers", type=int, default=None)

    def handle(self, *args, **options):
        if options["scale"] <= 0:
            raise CommandError("--scale doit être strictement positif.")
        out = options["out"] or settings.PULSECLUST["DATA_DIR"]

        try:
            dataset = generate(
                options["dataset"],
                options["seed"],
                scale=options["scale"],
                workers=options["workers"],
            )
            stem = write_dataset(dataset, out)
        except PulseclustError as exc:
            raise CommandError(str(exc)) from exc

        DatasetRecord.objects.record_dataset(dataset, stem, scale=options["scale"])
        self.stdout.write(
            self.style.SUCCESS(f"{dataset.manifest.num_samples} échantillons écrits dans {stem}")
        )
