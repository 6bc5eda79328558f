# clustering/reports.py
"""Fichiers CSV produits par train, eval et sweep."""
import csv
import logging
from pathlib import Path

import numpy as np
from attrs import asdict

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["stage", "dataset", "snr_db", "acc", "nmi", "ari", "purity"]
THRESHOLD_COLUMNS = ["epoch", "class_id", "threshold", "confident_fraction"]
SWEEP_COLUMNS = ["num_clusters", "silhouette", "purity"]
MINING_COLUMNS = ["k", "neighbor_purity", "center_purity"]
SUMMARY_METRICS = ("acc", "nmi", "ari")


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return value


def _open(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path, path.open("w", newline="", encoding="utf-8")


def _write(path, header, rows):
    path, handle = _open(path)
    with handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(value) for value in row])
    logger.info("Rapport écrit : %s", path)
    return path


def _write_records(path, columns, records):
    """Une ligne par enregistrement attrs ; les colonnes suivent ses champs."""
    path, handle = _open(path)
    with handle:
        writer = csv.DictWriter(handle, fieldnames=columns)
        writer.writeheader()
        for record in records:
            writer.writerow({key: _fmt(value) for key, value in asdict(record).items()})
    logger.info("Rapport écrit : %s", path)
    return path


def write_metrics(path, rows):
    return _write_records(path, METRIC_COLUMNS, rows)


def write_confusion(path, matrix, classes):
    """Lignes : classe vraie ; colonnes : classe prédite après affectation optimale."""
    header = ["true\\pred"] + [str(c) for c in classes]
    return _write(path, header, ([int(c)] + [int(v) for v in line] for c, line in zip(classes, matrix)))


def write_thresholds(path, rows):
    return _write_records(path, THRESHOLD_COLUMNS, rows)


def write_sweep(path, rows):
    return _write(path, SWEEP_COLUMNS, rows)


def write_mining(path, rows):
    return _write(path, MINING_COLUMNS, rows)


def summarize(results):
    """Moyenne et écart-type d'ACC/NMI/ARI par étape, sur les répétitions."""
    by_stage = {}
    for result in results:
        for stage, report in result.reports.items():
            by_stage.setdefault(stage, []).append(report.overall)
    summary = []
    for stage in sorted(by_stage):
        overall = by_stage[stage]
        line = [stage, len(overall)]
        for metric in SUMMARY_METRICS:
            values = np.array([getattr(row, metric) for row in overall])
            line += [float(values.mean()), float(values.std())]
        summary.append(line)
    return summary


def write_summary(path, results):
    header = ["stage", "repeats"]
    for metric in SUMMARY_METRICS:
        header += [f"{metric}_mean", f"{metric}_std"]
    return _write(path, header, summarize(results))


def write_pipeline_reports(result, output_dir):
    """metrics.csv, confusion.csv (dernière étape évaluée) et thresholds.csv."""
    output_dir = Path(output_dir)
    paths = [write_metrics(output_dir / "metrics.csv", result.metric_rows)]
    last = result.reports[max(result.reports)]
    paths.append(write_confusion(output_dir / "confusion.csv", last.confusion, last.classes))
    if result.threshold_rows:
        paths.append(write_thresholds(output_dir / "thresholds.csv", result.threshold_rows))
    return paths
