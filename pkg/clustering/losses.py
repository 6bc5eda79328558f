# clustering/losses.py
"""Objectifs d'entraînement : NT-Xent, contrastif supervisé, semi-supervisé à seuils dynamiques."""
import logging

import numpy as np
from attrs import evolve, field, frozen, validators
from django.db import models

from clustering.autodiff import Tensor, as_tensor, l2_normalize, log_softmax
from clustering.exceptions import ContractViolationError, ShapeError

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-3
ROW_SUM_TOLERANCE = 1e-6
# Logit additif qui exclut un terme du dénominateur (exp sous-dépasse vers 0)
EXCLUDED_LOGIT = -1e9

DEFAULT_TAU_MAX = 0.99
DEFAULT_THRESHOLD_FLOOR = 0.5
DEFAULT_UNLABELED_WEIGHT = 1.0


class Reduction(models.TextChoices):
    SUM = "sum", "Somme sur les ancres"
    MEAN = "mean", "Moyenne sur les ancres"


def _prepare(embeddings, normalize):
    embeddings = as_tensor(embeddings)
    if embeddings.ndim != 2:
        raise ShapeError(f"Embeddings de forme {embeddings.shape}, attendu (n, d)")
    if normalize:
        return l2_normalize(embeddings)
    norms = np.linalg.norm(embeddings.data, axis=1)
    if np.any(np.abs(norms - 1.0) > NORM_TOLERANCE):
        raise ContractViolationError(
            f"Embeddings non normalisés (écart maximal {np.max(np.abs(norms - 1.0)):.3g})"
        )
    return embeddings


def _similarity_log_probs(e, temperature):
    """log softmax des similarités, la diagonale (i = k) exclue du dénominateur."""
    if temperature <= 0:
        raise ContractViolationError(f"Température {temperature} non strictement positive")
    n = e.shape[0]
    similarity = (e @ e.T) * (1.0 / temperature)
    diagonal = np.eye(n, dtype=e.dtype) * EXCLUDED_LOGIT
    return log_softmax(similarity + diagonal, axis=1)


def _reduce(total, count, reduction):
    if reduction == Reduction.MEAN:
        return total * (1.0 / max(count, 1))
    return total


def paired_view_index(n):
    """Indice de la vue appariée : (0, 1), (2, 3), ..."""
    return np.arange(n) ^ 1


def ntxent_loss(embeddings, temperature=1.0, normalize=True, reduction=Reduction.SUM):
    """Perte contrastive sur 2N vues rangées par paires consécutives."""
    e = _prepare(embeddings, normalize)
    n = e.shape[0]
    if n < 2 or n % 2:
        raise ShapeError(f"NT-Xent attend un nombre pair de vues >= 2, reçu {e.shape}")
    log_probs = _similarity_log_probs(e, temperature)
    picked = log_probs[np.arange(n), paired_view_index(n)]
    return _reduce(-picked.sum(), n, reduction)


def positive_mask(labels):
    labels = np.asarray(labels)
    mask = labels[:, None] == labels[None, :]
    np.fill_diagonal(mask, False)
    return mask


def count_anchors_without_positives(labels):
    return int(np.sum(~positive_mask(labels).any(axis=1)))


def supcon_loss(embeddings, labels, temperature=1.0, normalize=True, reduction=Reduction.SUM):
    """Contrastif supervisé : les échantillons de même pseudo-étiquette sont positifs.

    Les ancres sans positif sont ignorées et comptées dans un avertissement.
    """
    labels = np.asarray(getattr(labels, "labels", labels))
    e = _prepare(embeddings, normalize)
    if labels.shape != (e.shape[0],):
        raise ShapeError(f"{labels.shape} étiquettes pour des embeddings {e.shape}")

    positives = positive_mask(labels)
    counts = positives.sum(axis=1)
    skipped = int(np.sum(counts == 0))
    if skipped:
        logger.warning("supcon : %d ancre(s) sans positif ignorée(s)", skipped)
    valid = counts.size - skipped
    if valid == 0:
        return e.sum() * 0.0

    weights = (positives / np.maximum(counts, 1)[:, None]).astype(e.dtype)
    log_probs = _similarity_log_probs(e, temperature)
    return _reduce(-(log_probs * weights).sum(), valid, reduction)


# -----------------
# Semi-supervisé
# -----------------

def _threshold_vector(instance, attribute, value):
    if value is not None and np.shape(value) != (instance.num_classes,):
        raise ShapeError(f"{attribute.name} de forme {np.shape(value)} pour {instance.num_classes} classes")


@frozen(eq=False)
class ThresholdState:
    """Seuils de confiance par classe ; `status` garde la dernière prédiction confiante par échantillon."""

    num_classes: int = field(validator=validators.ge(1))
    tau_max: float = field(default=DEFAULT_TAU_MAX, converter=float, validator=validators.gt(0.0))
    floor: float = field(default=DEFAULT_THRESHOLD_FLOOR, converter=float, validator=validators.gt(0.0))
    weight: float = field(default=DEFAULT_UNLABELED_WEIGHT, converter=float, validator=validators.ge(0.0))
    thresholds: np.ndarray = field(default=None, validator=_threshold_vector)
    counts: np.ndarray = field(default=None, validator=_threshold_vector)
    status: np.ndarray = None

    def __attrs_post_init__(self):
        if self.floor > self.tau_max:
            raise ContractViolationError(f"Plancher {self.floor} au-dessus de tau_max {self.tau_max}")
        if self.thresholds is None:
            object.__setattr__(self, "thresholds", np.full(self.num_classes, self.tau_max))
        if self.counts is None:
            object.__setattr__(self, "counts", np.zeros(self.num_classes, dtype=int))

    @classmethod
    def for_samples(cls, num_classes, num_samples, **kwargs):
        return cls(num_classes=num_classes, status=np.full(num_samples, -1, dtype=int), **kwargs)


def _probabilities(weak_probs):
    probs = np.asarray(weak_probs.data if isinstance(weak_probs, Tensor) else weak_probs, dtype=float)
    if probs.ndim != 2:
        raise ShapeError(f"Probabilités de forme {probs.shape}, attendu (n, C)")
    if probs.size and np.any(np.abs(probs.sum(axis=1) - 1.0) > ROW_SUM_TOLERANCE):
        raise ContractViolationError("Lignes de probabilités dont la somme diffère de 1")
    return probs


def thresholds_from_counts(counts, tau_max=DEFAULT_TAU_MAX, floor=DEFAULT_THRESHOLD_FLOOR):
    counts = np.asarray(counts, dtype=float)
    beta = counts / max(counts.max(initial=0.0), 1.0)
    return np.maximum(beta * tau_max, floor)


def update_thresholds(state, weak_probs, indices=None):
    """Nouvel état : σ_c compté sur les prédictions confiantes (max q ≥ tau_max)."""
    probs = _probabilities(weak_probs)
    confident = probs.max(axis=1, initial=0.0) >= state.tau_max
    predicted = np.where(confident, probs.argmax(axis=1), -1)

    status = state.status
    if indices is not None and status is not None:
        status = status.copy()
        status[np.asarray(indices, dtype=int)] = predicted
        source = status
    else:
        source = predicted
    counts = np.bincount(source[source >= 0], minlength=state.num_classes)[:state.num_classes]
    return evolve(
        state,
        counts=counts,
        status=status,
        thresholds=thresholds_from_counts(counts, state.tau_max, state.floor),
    )


def confident_mask(weak_probs, thresholds):
    probs = _probabilities(weak_probs)
    if probs.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    return probs.max(axis=1) >= np.asarray(thresholds)[probs.argmax(axis=1)]


def cross_entropy(logits, targets, weights=None, denominator=None):
    """Entropie croisée contre des cibles entières, moyennée sur `denominator` lignes."""
    targets = np.asarray(targets, dtype=int)
    if logits.ndim != 2 or targets.shape != (logits.shape[0],):
        raise ShapeError(f"Logits {logits.shape} et cibles {targets.shape}")
    if targets.size == 0:
        return logits.sum() * 0.0
    picked = log_softmax(logits, axis=1)[np.arange(targets.size), targets]
    if weights is not None:
        picked = picked * np.asarray(weights, dtype=logits.dtype)
    return -picked.sum() * (1.0 / max(denominator or targets.size, 1))


def combine(supervised, unsupervised, weight=DEFAULT_UNLABELED_WEIGHT):
    return supervised + unsupervised * weight


def semi_supervised_loss(labeled_logits, targets, weak_probs, strong_logits, state):
    """Renvoie (ℓ_s, ℓ_u, ℓ_semi).

    ℓ_u ne retient que les échantillons non étiquetés dont la confiance de la
    branche faible atteint le seuil de sa classe prédite ; la cible est
    l'argmax (one-hot) de cette branche.
    """
    labeled_logits = as_tensor(labeled_logits)
    strong_logits = as_tensor(strong_logits)
    probs = _probabilities(weak_probs)
    if probs.shape != strong_logits.shape:
        raise ShapeError(f"Branche faible {probs.shape} et branche forte {strong_logits.shape}")
    if probs.shape[1] != state.num_classes:
        raise ShapeError(f"{probs.shape[1]} classes pour un état à {state.num_classes} classes")

    supervised = cross_entropy(labeled_logits, targets)
    if probs.shape[0] == 0:
        unsupervised = strong_logits.sum() * 0.0
    else:
        mask = confident_mask(probs, state.thresholds)
        unsupervised = cross_entropy(strong_logits, probs.argmax(axis=1), weights=mask)
    return supervised, unsupervised, combine(supervised, unsupervised, state.weight)
