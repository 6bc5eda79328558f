# clustering/management/commands/eval.py

from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from clustering.models import MetricRecord, TrainingRun
from clustering.pipeline import evaluate_encoder, load_encoder
from clustering.reports import write_confusion, write_metrics
from waveforms.datasets import resolve_dataset
from waveforms.exceptions import PulseclustError
from waveforms.models import DatasetKind


class Command(BaseCommand):
    help = "Évalue un point de contrôle sur un dataset (ACC, NMI, ARI, pureté, matrice de confusion)."

    def add_arguments(self, parser):
        parser.add_argument("--checkpoint", type=Path, required=True)
        parser.add_argument("--dataset", default=DatasetKind.TOY, help="Type à générer ou chemin d'un dataset")
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--scale", type=float, default=1.0)
        parser.add_argument("--clusters", type=int, default=None)
        parser.add_argument("--restarts", type=int, default=10)
        parser.add_argument("--out", type=Path, default=None)
        parser.add_argument("--run", type=int, default=None, help="Entraînement auquel rattacher les métriques")

    def handle(self, *args, **options):
        run = None
        if options["run"] is not None:
            run = TrainingRun.objects.filter(pk=options["run"]).first()
            if run is None:
                raise CommandError(f"Entraînement {options['run']} introuvable.")

        try:
            encoder, metadata = load_encoder(options["checkpoint"])
            dataset = resolve_dataset(options["dataset"], options["seed"], scale=options["scale"])
            num_clusters = options["clusters"] or metadata.get("num_clusters") or dataset.num_classes
            report = evaluate_encoder(
                encoder,
                dataset,
                int(metadata.get("stage", 1)),
                num_clusters,
                seed=options["seed"],
                restarts=options["restarts"],
            )
        except PulseclustError as exc:
            raise CommandError(str(exc)) from exc

        out = options["out"] or options["checkpoint"].parent
        write_metrics(out / "metrics.csv", report.rows)
        write_confusion(out / "confusion.csv", report.confusion, report.classes)
        if run is not None:
            MetricRecord.objects.record_rows(run, report.rows)

        overall = report.overall
        self.stdout.write(
            self.style.SUCCESS(
                f"Étape {report.stage} sur {dataset.manifest.name} : ACC {overall.acc:.4f}, "
                f"NMI {overall.nmi:.4f}, ARI {overall.ari:.4f}, pureté {overall.purity:.4f}"
            )
        )
