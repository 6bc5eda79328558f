# clustering/management/commands/train.py

import logging
from pathlib import Path

from attrs import evolve
from django.core.management.base import BaseCommand, CommandError

from clustering.exceptions import ConfigurationError
from clustering.models import MetricRecord, ThresholdRecord, TrainingRun
from clustering.pipeline import default_output_dir, run_pipeline
from clustering.reports import write_pipeline_reports, write_summary
from clustering.serializers import load_run_config
from waveforms.datasets import resolve_dataset
from waveforms.exceptions import PulseclustError
from waveforms.models import DatasetKind

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "Entraîne l'encodeur sur les trois étapes et écrit métriques, seuils et points de contrôle."

    def add_arguments(self, parser):
        parser.add_argument("--config", type=Path, default=None, help="Fichier YAML de configuration")
        parser.add_argument("--full", action="store_true", help="Préréglage à l'échelle complète")
        parser.add_argument("--name", default=None)
        parser.add_argument("--seed", type=int, default=None)
        parser.add_argument("--out", type=Path, default=None)
        parser.add_argument(
            "--dataset",
            default=None,
            help=f"Type à générer ({', '.join(DatasetKind.values)}) ou chemin d'un dataset écrit par gen",
        )
        parser.add_argument("--scale", type=float, default=1.0, help="Échelle du dataset généré")
        parser.add_argument("--repeats", type=int, default=1)
        parser.add_argument("--start-stage", type=int, choices=(1, 2, 3), default=1)

    def handle(self, *args, **options):
        if options["repeats"] < 1:
            raise CommandError("--repeats doit valoir au moins 1.")
        if options["scale"] <= 0:
            raise CommandError("--scale doit être strictement positif.")

        source = options["dataset"]
        out = str(options["out"]) if options["out"] else None
        overrides = {"name": options["name"], "seed": options["seed"], "output_dir": out}
        if source in DatasetKind.values:
            overrides["dataset_kind"] = source
        elif source:
            overrides["dataset"] = str(source)

        try:
            config = load_run_config(options["config"], full=options["full"], **overrides)
            dataset = resolve_dataset(config.dataset or config.dataset_kind, config.seed, scale=options["scale"])
            output_dir = config.output_dir or default_output_dir(config.name)
            results = [
                self._run_once(config, dataset, repeat, options["repeats"], output_dir, options["start_stage"])
                for repeat in range(options["repeats"])
            ]
            if len(results) > 1:
                write_summary(output_dir / "summary.csv", results)
        except ConfigurationError as exc:
            raise CommandError(f"{exc} {exc.detail}") from exc
        except PulseclustError as exc:
            raise CommandError(str(exc)) from exc

        overall = results[-1].reports[3].overall
        self.stdout.write(
            self.style.SUCCESS(
                f"{config.name} terminé : ACC {overall.acc:.4f}, NMI {overall.nmi:.4f}, ARI {overall.ari:.4f} "
                f"({output_dir})"
            )
        )

    def _run_once(self, config, dataset, repeat, repeats, output_dir, start_stage):
        # Chaque répétition décale la graine d'entraînement, le dataset reste le même
        if repeats > 1:
            config = evolve(config, seed=config.seed + repeat)
            output_dir = output_dir / f"repeat-{repeat}"
        run = TrainingRun.objects.start(config, output_dir)
        try:
            result = run_pipeline(config, dataset, start_stage=start_stage, output_dir=output_dir)
        except Exception:
            run.fail()
            raise
        write_pipeline_reports(result, output_dir)
        MetricRecord.objects.record_rows(run, result.metric_rows)
        ThresholdRecord.objects.record_rows(run, result.threshold_rows)
        run.finish(last_stage=3)
        logger.info("Entraînement %s (répétition %d) enregistré sous l'identifiant %d", config.name, repeat, run.pk)
        return result
