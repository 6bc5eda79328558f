# clustering/pipeline.py
"""Orchestration des trois étapes : prétexte contrastif, fine-tuning
pseudo-supervisé, auto-étiquetage semi-supervisé ; évaluation et balayages.
"""
import logging
import queue
import threading
from pathlib import Path

import numpy as np
from attrs import asdict, evolve, field, frozen, validators
from django.conf import settings
from django.db import models
from scipy.special import softmax as np_softmax

from clustering.autodiff import DEFAULT_DTYPE, no_grad
from clustering.checkpoints import load_checkpoint, save_checkpoint
from clustering.encoder import EncoderConfig, build_encoder
from clustering.exceptions import CheckpointError, ConfigurationError
from clustering.losses import (
    DEFAULT_TAU_MAX,
    DEFAULT_THRESHOLD_FLOOR,
    DEFAULT_UNLABELED_WEIGHT,
    Reduction,
    ThresholdState,
    confident_mask,
    ntxent_loss,
    semi_supervised_loss,
    supcon_loss,
    update_thresholds,
)
from clustering.metrics import (
    PseudoLabelSet,
    confusion_matrix,
    kmeans,
    mine_reliable,
    mining_purity,
    neighbor_purity,
    purity,
    score_labels,
    silhouette,
)
from clustering.optim import OptimizerKind, build_optimizer
from waveforms.augmentation import AugmentationPolicy, StrengthTier, apply_policy
from waveforms.core import IqSignal
from waveforms.models import DatasetKind

logger = logging.getLogger(__name__)

PREFETCH_DEPTH = 2
EMBED_BATCH = 256
CHECKPOINT_NAME = "stage{}.ckpt"
# Jeux évalués aussi par niveau de RSB
PER_SNR_KINDS = (DatasetKind.DATASET2, DatasetKind.TOY_SWEEP)


class PairMode(models.TextChoices):
    TWO_VIEWS = "two_views", "Deux vues augmentées"
    ORIGINAL_AND_VIEW = "original_and_view", "Trame originale et une vue"


# -----------------
# Configuration
# -----------------

def _positive(instance, attribute, value):
    if value <= 0:
        raise ConfigurationError(f"{attribute.name} doit être strictement positif", {attribute.name: value})


@frozen
class StageOneConfig:
    optimizer: str = field(default=OptimizerKind.SGD, converter=str, validator=validators.in_(OptimizerKind.values))
    lr: float = field(default=0.05, converter=float, validator=validators.ge(0.0))
    momentum: float = field(default=0.9, converter=float)
    batch_size: int = field(default=64, validator=_positive)
    max_epochs: int = field(default=30, validator=validators.ge(0))
    patience: int = field(default=5, validator=_positive)
    min_improvement: float = field(default=1e-3, converter=float)
    temperature: float = field(default=0.5, converter=float, validator=_positive)
    tier: str = field(default=StrengthTier.STRONG, converter=str, validator=validators.in_(StrengthTier.values))
    pair_mode: str = field(default=PairMode.TWO_VIEWS, converter=str, validator=validators.in_(PairMode.values))
    reduction: str = field(default=Reduction.MEAN, converter=str, validator=validators.in_(Reduction.values))


@frozen
class StageTwoConfig:
    optimizer: str = field(default=OptimizerKind.SGD, converter=str, validator=validators.in_(OptimizerKind.values))
    lr: float = field(default=0.05, converter=float, validator=validators.ge(0.0))
    momentum: float = field(default=0.9, converter=float)
    batch_size: int = field(default=64, validator=_positive)
    max_epochs: int = field(default=30, validator=validators.ge(0))
    patience: int = field(default=5, validator=_positive)
    min_improvement: float = field(default=1e-3, converter=float)
    temperature: float = field(default=0.5, converter=float, validator=_positive)
    tier: str = field(default=StrengthTier.STRONG, converter=str, validator=validators.in_(StrengthTier.values))
    num_neighbors: int = field(default=100, validator=_positive)
    reduction: str = field(default=Reduction.MEAN, converter=str, validator=validators.in_(Reduction.values))


@frozen
class StageThreeConfig:
    optimizer: str = field(default=OptimizerKind.ADAM, converter=str, validator=validators.in_(OptimizerKind.values))
    lr: float = field(default=1e-3, converter=float, validator=validators.ge(0.0))
    momentum: float = field(default=0.9, converter=float)
    batch_size: int = field(default=64, validator=_positive)
    max_epochs: int = field(default=30, validator=validators.ge(0))
    patience: int = field(default=5, validator=_positive)
    min_improvement: float = field(default=1e-3, converter=float)
    num_neighbors: int = field(default=150, validator=_positive)
    tau_max: float = field(default=DEFAULT_TAU_MAX, converter=float, validator=_positive)
    threshold_floor: float = field(default=DEFAULT_THRESHOLD_FLOOR, converter=float, validator=_positive)
    unlabeled_weight: float = field(default=DEFAULT_UNLABELED_WEIGHT, converter=float, validator=validators.ge(0.0))
    weak_tier: str = field(default=StrengthTier.WEAK, converter=str, validator=validators.in_(StrengthTier.values))
    strong_tier: str = field(default=StrengthTier.MODERATE, converter=str, validator=validators.in_(StrengthTier.values))


@frozen
class RunConfig:
    name: str = "run"
    seed: int = field(default=0, converter=int)
    # Chemin d'un dataset écrit par `gen` ; vide : dataset généré
    dataset: str = ""
    dataset_kind: str = field(default=DatasetKind.TOY, converter=str, validator=validators.in_(DatasetKind.values))
    output_dir: Path = field(default=None, converter=lambda v: Path(v) if v else None)
    num_clusters: int | None = None
    kmeans_restarts: int = field(default=10, validator=_positive)
    encoder: EncoderConfig = field(factory=lambda: EncoderConfig(projection_dim=4, scale=4))
    stage1: StageOneConfig = field(factory=StageOneConfig)
    stage2: StageTwoConfig = field(factory=StageTwoConfig)
    stage3: StageThreeConfig = field(factory=StageThreeConfig)

    def clusters_for(self, dataset):
        return self.num_clusters or dataset.num_classes

    def check_against(self, dataset):
        """Vérifie K ≤ N et M ≤ N pour le dataset donné.

        K·C > N reste permis : les voisinages se recouvrent et chaque point revient au centre le plus proche.
        """
        errors = {}
        for key, stage in (("stage2", self.stage2), ("stage3", self.stage3)):
            if stage.num_neighbors > len(dataset):
                errors[key] = {"num_neighbors": f"{stage.num_neighbors} voisins > {len(dataset)} échantillons"}
        if errors:
            raise ConfigurationError("Nombre de voisins incompatible avec la taille du dataset", errors)

    def as_json(self):
        return asdict(self, value_serializer=lambda inst, a, v: str(v) if isinstance(v, Path) else v)


def desk_config(**overrides):
    """Échelle bureau : jeu jouet 4 classes, encodeur réduit, lot 64, 30 époques au plus."""
    return evolve(RunConfig(), **overrides)


def full_config(**overrides):
    """Échelle complète : 12 classes, optimiseurs et taux d'origine, lot 512, K=200, M=300."""
    config = RunConfig(
        dataset_kind=DatasetKind.DATASET1,
        encoder=EncoderConfig(projection_dim=12, scale=1),
        stage1=StageOneConfig(lr=1e-4, batch_size=512, temperature=1.0, max_epochs=200),
        stage2=StageTwoConfig(lr=1e-4, batch_size=512, temperature=1.0, num_neighbors=200, max_epochs=200),
        stage3=StageThreeConfig(lr=2e-4, batch_size=512, num_neighbors=300, max_epochs=200),
    )
    return evolve(config, **overrides)


# -----------------
# Rapports
# -----------------

@frozen
class MetricRow:
    stage: int
    dataset: str
    snr_db: float | None
    acc: float
    nmi: float
    ari: float
    purity: float


@frozen
class ThresholdRow:
    epoch: int
    class_id: int
    threshold: float
    confident_fraction: float


@frozen(eq=False)
class EvaluationReport:
    stage: int
    rows: tuple
    confusion: np.ndarray
    classes: tuple
    predictions: np.ndarray

    @property
    def overall(self):
        return next(row for row in self.rows if row.snr_db is None)


@frozen(eq=False)
class StageOutcome:
    stage: int
    history: tuple
    checkpoint: Path | None = None
    pseudo_labels: PseudoLabelSet | None = None
    thresholds: tuple = ()
    unlabeled_losses: tuple = ()
    confident_fractions: tuple = ()


@frozen(eq=False)
class PipelineResult:
    config: RunConfig
    outcomes: dict
    reports: dict

    @property
    def metric_rows(self):
        return [row for stage in sorted(self.reports) for row in self.reports[stage].rows]

    @property
    def threshold_rows(self):
        outcome = self.outcomes.get(3)
        return list(outcome.thresholds) if outcome else []


# -----------------
# Outils d'entraînement
# -----------------

class EarlyStopping:
    """Arrêt quand la perte ne baisse plus d'au moins `min_improvement` (relatif) pendant `patience` époques."""

    def __init__(self, patience, min_improvement):
        self.patience = patience
        self.min_improvement = min_improvement
        self.best = np.inf
        self.wait = 0

    def step(self, loss):
        if not np.isfinite(self.best) or self.best - loss > self.min_improvement * abs(self.best):
            self.best = loss
            self.wait = 0
        else:
            self.wait += 1
        return self.wait >= self.patience


class _Failure:

    def __init__(self, exc):
        self.exc = exc


class BatchPrefetcher:
    """Construit les lots dans un thread, au plus `depth` lots d'avance, dans l'ordre des tâches."""

    _DONE = object()

    def __init__(self, jobs, build, depth=PREFETCH_DEPTH):
        self.jobs = list(jobs)
        self.build = build
        self.depth = depth

    def __iter__(self):
        pending = queue.Queue(maxsize=self.depth)
        stop = threading.Event()

        def produce():
            try:
                for job in self.jobs:
                    if stop.is_set():
                        return
                    pending.put(self.build(job))
            except Exception as exc:  # remonté au consommateur
                pending.put(_Failure(exc))
            else:
                pending.put(self._DONE)

        worker = threading.Thread(target=produce, name="batch-prefetch", daemon=True)
        worker.start()
        try:
            while True:
                item = pending.get()
                if item is self._DONE:
                    break
                if isinstance(item, _Failure):
                    raise item.exc
                yield item
        finally:
            stop.set()
            while worker.is_alive():
                try:
                    pending.get(timeout=0.05)
                except queue.Empty:
                    pass
            worker.join()


def normalize_frames(iq):
    """Trames (B, 2, L) ramenées à une puissance moyenne unité ; les trames nulles restent nulles."""
    iq = np.asarray(iq, dtype=np.float64)
    rms = np.sqrt(np.mean(iq ** 2, axis=(1, 2)) * 2)
    rms[rms == 0] = 1.0
    return iq / rms[:, None, None]


def to_channels(samples):
    return np.stack([samples.real, samples.imag])


def embed_frames(encoder, frames):
    """Caractéristiques L2-normalisées (N, feature_dim), mode évaluation."""
    was_training = encoder.training
    encoder.eval()
    try:
        chunks = [encoder.encode(frames[i:i + EMBED_BATCH]) for i in range(0, len(frames), EMBED_BATCH)]
    finally:
        encoder.train(was_training)
    return np.concatenate(chunks).astype(np.float64)


def predict_frames(encoder, frames):
    """Classe prédite par la tête de projection (argmax)."""
    was_training = encoder.training
    encoder.eval()
    try:
        with no_grad():
            logits = [encoder(frames[i:i + EMBED_BATCH])[1].data for i in range(0, len(frames), EMBED_BATCH)]
    finally:
        encoder.train(was_training)
    return np.concatenate(logits).argmax(axis=1)


def evaluate_encoder(encoder, dataset, stage, num_clusters, seed=0, restarts=10):
    """Étapes 1-2 : k-means sur les caractéristiques ; étape 3 : argmax de la tête.

    La tête n'est utilisée que si sa largeur vaut `num_clusters` ; sinon on
    retombe sur k-means.
    """
    frames = normalize_frames(dataset.iq).astype(encoder.dtype)
    if stage >= 3 and encoder.config.projection_dim == num_clusters:
        predictions = predict_frames(encoder, frames)
    else:
        features = embed_frames(encoder, frames)
        predictions = kmeans(features, num_clusters, seed=seed, restarts=restarts).assignments
    return build_report(stage, dataset, predictions)


def _batches(order, batch_size):
    batches = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
    # Un lot d'un seul échantillon n'a pas de paire négative
    if len(batches) > 1 and len(batches[-1]) < 2:
        batches[-1] = np.concatenate([batches.pop(-2), batches[-1]])
    return batches


class Trainer:
    """Porte l'encodeur et le dataset à travers les trois étapes."""

    def __init__(self, config, dataset, encoder=None, output_dir=None, dtype=DEFAULT_DTYPE):
        self.config = config
        self.dataset = dataset
        self.num_clusters = config.clusters_for(dataset)
        self.dtype = np.dtype(dtype)
        self.output_dir = Path(output_dir) if output_dir else config.output_dir
        self.encoder = encoder or build_encoder(
            evolve(config.encoder, frame_len=dataset.manifest.frame_len),
            num_classes=self.num_clusters,
            seed=config.seed,
            dtype=dtype,
        )
        self.sample_rate_hz = dataset.manifest.sample_rate_hz
        self.frame_len = dataset.manifest.frame_len
        self._complex = dataset.complex_frames()
        self._frames = normalize_frames(dataset.iq).astype(self.dtype)

    # Vues

    def view(self, index, policy, stage, epoch, view):
        rng = np.random.default_rng([self.config.seed, stage, epoch, int(index), view])
        signal = IqSignal(self._complex[index], self.sample_rate_hz)
        return to_channels(apply_policy(signal, policy, rng, self.frame_len).samples)

    def views(self, indices, policy, stage, epoch, view):
        stacked = np.stack([self.view(i, policy, stage, epoch, view) for i in indices])
        return normalize_frames(stacked).astype(self.dtype)

    def _pairs(self, indices, policy, stage, epoch, pair_mode=PairMode.TWO_VIEWS):
        """(2B, 2, L) rangé (vue a de i, vue b de i)."""
        if pair_mode == PairMode.ORIGINAL_AND_VIEW:
            first = self._frames[indices]
        else:
            first = self.views(indices, policy, stage, epoch, 0)
        second = self.views(indices, policy, stage, epoch, 1)
        batch = np.empty((2 * len(indices),) + first.shape[1:], dtype=self.dtype)
        batch[0::2] = first
        batch[1::2] = second
        return batch

    # Inférence

    def embed(self, frames=None):
        return embed_frames(self.encoder, self._frames if frames is None else frames)

    def predict(self, frames=None):
        return predict_frames(self.encoder, self._frames if frames is None else frames)

    def mine(self, num_neighbors, source_stage):
        features = self.embed()
        clusters = kmeans(features, self.num_clusters, seed=self.config.seed, restarts=self.config.kmeans_restarts)
        return mine_reliable(features, clusters.centers, num_neighbors, source_stage=source_stage)

    # Boucle commune

    def _fit(self, stage, stage_config, pool_for_epoch, build, loss_of, after_epoch=None):
        optimizer = build_optimizer(
            stage_config.optimizer, self.encoder.parameters(), stage_config.lr, momentum=stage_config.momentum
        )
        stopper = EarlyStopping(stage_config.patience, stage_config.min_improvement)
        history = []
        self.encoder.train()
        for epoch in range(stage_config.max_epochs):
            pool = pool_for_epoch(epoch)
            order = np.random.default_rng([self.config.seed, stage, epoch]).permutation(pool)
            jobs = [(epoch, step, batch) for step, batch in enumerate(_batches(order, stage_config.batch_size))]
            losses = []
            for batch in BatchPrefetcher(jobs, build):
                optimizer.zero_grad()
                loss = loss_of(batch)
                loss.backward()
                optimizer.step()
                losses.append(loss.item())
            epoch_loss = float(np.mean(losses)) if losses else 0.0
            history.append(epoch_loss)
            extra = after_epoch(epoch) if after_epoch else ""
            logger.info("Étape %d, époque %d : perte %.4f%s", stage, epoch, epoch_loss, extra)
            if stopper.step(epoch_loss):
                logger.info("Étape %d : arrêt anticipé à l'époque %d", stage, epoch)
                break
        self.encoder.eval()
        return tuple(history)

    # Étapes

    def stage1_pretext(self):
        """Discrimination d'instances : NT-Xent sur deux vues fortes par échantillon."""
        cfg = self.config.stage1
        policy = AugmentationPolicy.for_tier(cfg.tier)
        everything = np.arange(len(self.dataset))

        def build(job):
            epoch, _, indices = job
            return self._pairs(indices, policy, 1, epoch, cfg.pair_mode)

        def loss_of(batch):
            _, projections = self.encoder(batch)
            return ntxent_loss(projections, cfg.temperature, reduction=cfg.reduction)

        history = self._fit(1, cfg, lambda epoch: everything, build, loss_of)
        return StageOutcome(stage=1, history=history, checkpoint=self.save(1, history))

    def stage2_pseudo_supervised(self):
        """k-means puis extraction des K plus proches de chaque centre, ré-extraits à chaque époque."""
        cfg = self.config.stage2
        policy = AugmentationPolicy.for_tier(cfg.tier)
        mined = {}

        def pool_for_epoch(epoch):
            mined["set"] = self.mine(cfg.num_neighbors, source_stage=2)
            mined["labels"] = dict(zip(mined["set"].indices.tolist(), mined["set"].labels.tolist()))
            self.encoder.train()
            return mined["set"].indices

        def build(job):
            epoch, _, indices = job
            labels = np.repeat([mined["labels"][int(i)] for i in indices], 2)
            return self._pairs(indices, policy, 2, epoch), labels

        def loss_of(batch):
            frames, labels = batch
            _, projections = self.encoder(frames)
            return supcon_loss(projections, labels, cfg.temperature, reduction=cfg.reduction)

        history = self._fit(2, cfg, pool_for_epoch, build, loss_of)
        return StageOutcome(stage=2, history=history, checkpoint=self.save(2, history), pseudo_labels=mined.get("set"))

    def stage3_self_label(self):
        """Apprentissage semi-supervisé : M échantillons extraits étiquetés, le reste non étiqueté."""
        cfg = self.config.stage3
        weak = AugmentationPolicy.for_tier(cfg.weak_tier)
        strong = AugmentationPolicy.for_tier(cfg.strong_tier)
        pseudo = self.mine(cfg.num_neighbors, source_stage=3)
        targets = dict(zip(pseudo.indices.tolist(), pseudo.labels.tolist()))
        unlabeled = np.setdiff1d(np.arange(len(self.dataset)), pseudo.indices)
        if unlabeled.size == 0:
            unlabeled = np.arange(len(self.dataset))
        steps_per_epoch = len(_batches(np.arange(len(pseudo)), cfg.batch_size))

        state = {
            "thresholds": ThresholdState.for_samples(
                self.num_clusters, len(self.dataset),
                tau_max=cfg.tau_max, floor=cfg.threshold_floor, weight=cfg.unlabeled_weight,
            ),
            "confident": 0,
            "seen": 0,
            "unlabeled_loss": [],
        }
        rows, unlabeled_losses, fractions = [], [], []

        def unlabeled_batch(epoch, step):
            order = np.random.default_rng([self.config.seed, 3, epoch, 1]).permutation(unlabeled)
            size = cfg.batch_size
            start = (step * size) % len(order)
            return np.take(order, np.arange(start, start + size), mode="wrap")[:min(size, len(order))]

        def build(job):
            epoch, step, indices = job
            others = unlabeled_batch(epoch, step)
            frames = np.concatenate([
                self.views(indices, weak, 3, epoch, 0),
                self.views(others, weak, 3, epoch, 1),
                self.views(others, strong, 3, epoch, 2),
            ])
            labels = np.array([targets[int(i)] for i in indices])
            return frames, labels, others

        def loss_of(batch):
            frames, labels, others = batch
            _, logits = self.encoder(frames)
            n_l, n_u = len(labels), len(others)
            labeled_logits = logits[:n_l]
            weak_logits = logits[n_l:n_l + n_u]
            strong_logits = logits[n_l + n_u:]
            weak_probs = np_softmax(weak_logits.data.astype(np.float64), axis=1)

            current = state["thresholds"]
            mask = confident_mask(weak_probs, current.thresholds)
            state["confident"] += int(mask.sum())
            state["seen"] += n_u
            _, lu, lsemi = semi_supervised_loss(labeled_logits, labels, weak_probs, strong_logits, current)
            state["unlabeled_loss"].append(lu.item())
            state["thresholds"] = update_thresholds(current, weak_probs, indices=others)
            return lsemi

        def after_epoch(epoch):
            fraction = state["confident"] / max(state["seen"], 1)
            fractions.append(fraction)
            unlabeled_losses.append(float(np.mean(state["unlabeled_loss"])) if state["unlabeled_loss"] else 0.0)
            for class_id, threshold in enumerate(state["thresholds"].thresholds):
                rows.append(ThresholdRow(epoch, class_id, float(threshold), fraction))
            state.update(confident=0, seen=0, unlabeled_loss=[])
            return f", part confiante {fraction:.3f}"

        logger.info(
            "Étape 3 : %d étiquetés, %d non étiquetés, %d pas par époque",
            len(pseudo), unlabeled.size, steps_per_epoch,
        )
        history = self._fit(3, cfg, lambda epoch: pseudo.indices, build, loss_of, after_epoch=after_epoch)
        return StageOutcome(
            stage=3,
            history=history,
            checkpoint=self.save(3, history),
            pseudo_labels=pseudo,
            thresholds=tuple(rows),
            unlabeled_losses=tuple(unlabeled_losses),
            confident_fractions=tuple(fractions),
        )

    def run_stage(self, stage):
        return {1: self.stage1_pretext, 2: self.stage2_pseudo_supervised, 3: self.stage3_self_label}[stage]()

    # Évaluation

    def evaluate(self, stage, dataset=None, seed=None):
        """Étapes 1-2 : k-means sur les caractéristiques ; étape 3 : argmax de la tête."""
        return evaluate_encoder(
            self.encoder,
            dataset or self.dataset,
            stage,
            self.num_clusters,
            seed=self.config.seed if seed is None else seed,
            restarts=self.config.kmeans_restarts,
        )

    # Points de contrôle

    def save(self, stage, history=()):
        if self.output_dir is None:
            return None
        metadata = {
            "stage": stage,
            "seed": self.config.seed,
            "num_clusters": self.num_clusters,
            "encoder": asdict(self.encoder.config),
            "history": list(history),
        }
        return save_checkpoint(self.output_dir / CHECKPOINT_NAME.format(stage), self.encoder.state_dict(), metadata)


def build_report(stage, dataset, predictions):
    truth = dataset.labels
    name = dataset.manifest.name
    rows = [MetricRow(stage=stage, dataset=name, snr_db=None, **score_labels(predictions, truth))]
    if dataset.manifest.kind in PER_SNR_KINDS:
        snr = dataset.snr_db
        for level in np.unique(snr):
            members = snr == level
            rows.append(MetricRow(stage=stage, dataset=name, snr_db=float(level),
                                  **score_labels(predictions[members], truth[members])))
    classes = tuple(int(c) for c in np.unique(truth))
    return EvaluationReport(
        stage=stage,
        rows=tuple(rows),
        confusion=confusion_matrix(predictions, truth, classes),
        classes=classes,
        predictions=predictions,
    )


def load_encoder(path, dtype=DEFAULT_DTYPE):
    """Reconstruit l'encodeur d'un point de contrôle ; renvoie (encodeur, métadonnées)."""
    tensors, metadata = load_checkpoint(path)
    try:
        config = EncoderConfig(**metadata["encoder"])
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"Métadonnées d'encodeur absentes ou invalides dans {path}") from exc
    encoder = build_encoder(config, dtype=dtype)
    encoder.load_state_dict(tensors)
    encoder.eval()
    return encoder, metadata


def run_pipeline(config, dataset, start_stage=1, output_dir=None):
    """Enchaîne les étapes `start_stage`..3, évalue chacune et renvoie un PipelineResult.

    Une reprise charge `stage{start_stage - 1}.ckpt` dans le répertoire de sortie.
    """
    config.check_against(dataset)
    output_dir = Path(output_dir) if output_dir else config.output_dir
    if start_stage not in (1, 2, 3):
        raise ConfigurationError(f"Étape de départ {start_stage} hors de 1..3", {"start_stage": start_stage})

    encoder = None
    if start_stage > 1:
        if output_dir is None:
            raise ConfigurationError("Une reprise exige un répertoire de sortie", {"output_dir": None})
        encoder, _ = load_encoder(output_dir / CHECKPOINT_NAME.format(start_stage - 1))
    trainer = Trainer(config, dataset, encoder=encoder, output_dir=output_dir)

    outcomes, reports = {}, {}
    for stage in range(start_stage, 4):
        logger.info("Pipeline %s : étape %d", config.name, stage)
        outcomes[stage] = trainer.run_stage(stage)
        reports[stage] = trainer.evaluate(stage)
        logger.info("Étape %d : ACC %.4f", stage, reports[stage].overall.acc)
    return PipelineResult(config=config, outcomes=outcomes, reports=reports)


@frozen(eq=False)
class SweepReport:
    # (nombre de clusters, silhouette ou None, pureté)
    rows: tuple
    best_num_clusters: int | None


def sweep_clusters(features, truth, cluster_range, seed=0, restarts=10):
    """k-means pour chaque C ; silhouette indéfinie (None) pour C = 1."""
    rows = []
    for num_clusters in cluster_range:
        assignments = kmeans(features, num_clusters, seed=seed, restarts=restarts).assignments
        score = silhouette(features, assignments) if num_clusters >= 2 else None
        rows.append((int(num_clusters), score, purity(assignments, truth)))
    scored = [row for row in rows if row[1] is not None]
    best = max(scored, key=lambda row: row[1])[0] if scored else None
    return SweepReport(rows=tuple(rows), best_num_clusters=best)


def compare_mining(features, truth, neighbor_counts, num_clusters, seed=0, restarts=10):
    """Pureté des k plus proches voisins face à la pureté de l'extraction autour des centres."""
    clusters = kmeans(features, num_clusters, seed=seed, restarts=restarts)
    rows = []
    for k in neighbor_counts:
        mined = mine_reliable(features, clusters.centers, k)
        rows.append((int(k), neighbor_purity(features, truth, k), mining_purity(mined, truth)))
    return tuple(rows)


def default_output_dir(name):
    return Path(settings.PULSECLUST["OUTPUT_DIR"]) / name
