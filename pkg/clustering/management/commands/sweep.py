# clustering/management/commands/sweep.py

from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from clustering.pipeline import compare_mining, embed_frames, load_encoder, normalize_frames, sweep_clusters
from clustering.reports import write_mining, write_sweep
from waveforms.datasets import resolve_dataset
from waveforms.exceptions import PulseclustError
from waveforms.models import DatasetKind


class Command(BaseCommand):
    help = (
        "Balaye le nombre de clusters (silhouette, pureté) et compare la pureté "
        "des voisins à celle de l'extraction autour des centres."
    )

    def add_arguments(self, parser):
        parser.add_argument("--checkpoint", type=Path, required=True)
        parser.add_argument("--dataset", default=DatasetKind.TOY, help="Type à générer ou chemin d'un dataset")
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--scale", type=float, default=1.0)
        parser.add_argument("--clusters", type=int, nargs=2, default=(1, 8), metavar=("MIN", "MAX"))
        parser.add_argument("--neighbors", type=int, nargs="*", default=[])
        parser.add_argument("--restarts", type=int, default=10)
        parser.add_argument("--out", type=Path, default=None)

    def handle(self, *args, **options):
        low, high = options["clusters"]
        if low < 1 or high < low:
            raise CommandError("--clusters attend MIN ≥ 1 et MAX ≥ MIN.")

        try:
            encoder, _ = load_encoder(options["checkpoint"])
            dataset = resolve_dataset(options["dataset"], options["seed"], scale=options["scale"])
            features = embed_frames(encoder, normalize_frames(dataset.iq).astype(encoder.dtype))
            sweep = sweep_clusters(
                features, dataset.labels, range(low, high + 1), seed=options["seed"], restarts=options["restarts"]
            )
            mining = compare_mining(
                features,
                dataset.labels,
                options["neighbors"],
                dataset.num_classes,
                seed=options["seed"],
                restarts=options["restarts"],
            ) if options["neighbors"] else ()
        except PulseclustError as exc:
            raise CommandError(str(exc)) from exc

        out = options["out"] or options["checkpoint"].parent
        write_sweep(out / "sweep.csv", sweep.rows)
        if mining:
            write_mining(out / "mining.csv", mining)

        self.stdout.write(
            self.style.SUCCESS(f"Meilleur nombre de clusters (silhouette) : {sweep.best_num_clusters}")
        )
