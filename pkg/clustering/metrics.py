# clustering/metrics.py
"""K-means, extraction des échantillons fiables et métriques de clustering."""
import logging

import numpy as np
from attrs import field, frozen, validators
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import kmeans_plusplus
from sklearn.metrics import (
    adjusted_rand_score,
    confusion_matrix as sk_confusion_matrix,
    normalized_mutual_info_score,
    silhouette_score,
)
from sklearn.metrics.cluster import contingency_matrix
from sklearn.metrics.pairwise import euclidean_distances
from sklearn.neighbors import NearestNeighbors

from waveforms.exceptions import InvalidInputError

logger = logging.getLogger(__name__)

KMEANS_RESTARTS = 10
KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-6


def _as_features(features):
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise InvalidInputError(f"Caractéristiques de forme {features.shape}, attendu (N, d)")
    return features


def _as_labels(labels, name):
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise InvalidInputError(f"{name} de forme {labels.shape}, attendu (N,)")
    return labels.astype(int)


def _paired(pred, truth):
    pred, truth = _as_labels(pred, "pred"), _as_labels(truth, "truth")
    if pred.shape != truth.shape:
        raise InvalidInputError(f"pred {pred.shape} et truth {truth.shape} de tailles différentes")
    if pred.size == 0:
        raise InvalidInputError("Étiquetages vides")
    return pred, truth


# -----------------
# K-means
# -----------------

@frozen(eq=False)
class ClusterResult:
    assignments: np.ndarray
    centers: np.ndarray
    inertia: float
    # Inertie après chaque étape d'affectation
    history: tuple = ()

    @property
    def num_clusters(self):
        return self.centers.shape[0]


def _lloyd(features, centers, max_iter, tol):
    history = []
    for _ in range(max_iter):
        distances = euclidean_distances(features, centers, squared=True)
        assignments = distances.argmin(axis=1)
        history.append(float(distances[np.arange(len(features)), assignments].sum()))

        updated = centers.copy()
        for c in range(centers.shape[0]):
            members = assignments == c
            if members.any():
                updated[c] = features[members].mean(axis=0)
            else:
                # Cluster vide : réensemencé sur le point le plus mal servi
                farthest = int(distances[np.arange(len(features)), assignments].argmax())
                updated[c] = features[farthest]
        shift = np.max(np.linalg.norm(updated - centers, axis=1))
        centers = updated
        if shift < tol:
            break

    distances = euclidean_distances(features, centers, squared=True)
    assignments = distances.argmin(axis=1)
    inertia = float(distances[np.arange(len(features)), assignments].sum())
    return ClusterResult(assignments=assignments, centers=centers, inertia=inertia, history=tuple(history))


def kmeans(features, num_clusters, seed=0, restarts=KMEANS_RESTARTS, max_iter=KMEANS_MAX_ITER, tol=KMEANS_TOL):
    """Initialisation k-means++, itérations de Lloyd, meilleure inertie sur `restarts` essais."""
    features = _as_features(features)
    if num_clusters < 1 or len(features) < num_clusters:
        raise InvalidInputError(f"{len(features)} points pour {num_clusters} clusters")

    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(restarts, 1)):
        centers, _ = kmeans_plusplus(features, num_clusters, random_state=int(rng.integers(2**31 - 1)))
        result = _lloyd(features, centers, max_iter, tol)
        if best is None or result.inertia < best.inertia:
            best = result
    return best


# -----------------
# Échantillons fiables
# -----------------

def _unique_indices(instance, attribute, value):
    if len(np.unique(value)) != len(value):
        raise InvalidInputError("Indices dupliqués dans le jeu pseudo-étiqueté")


@frozen(eq=False)
class PseudoLabelSet:
    indices: np.ndarray = field(converter=lambda v: np.asarray(v, dtype=int), validator=_unique_indices)
    labels: np.ndarray = field(converter=lambda v: np.asarray(v, dtype=int))
    num_clusters: int = field(validator=validators.ge(1))
    source_stage: int = field(default=2, validator=validators.in_((2, 3)))

    @labels.validator
    def _check_labels(self, attribute, value):
        if value.shape != self.indices.shape:
            raise InvalidInputError(f"{value.size} étiquettes pour {self.indices.size} indices")
        if value.size and (value.min() < 0 or value.max() >= self.num_clusters):
            raise InvalidInputError(f"Étiquettes hors de [0, {self.num_clusters})")

    def __len__(self):
        return int(self.indices.size)


def mine_reliable(features, centers, num_neighbors, source_stage=2):
    """Les `num_neighbors` points les plus proches de chaque centre.

    Un point revendiqué par plusieurs centres va au plus proche (égalité : plus petit id).
    """
    features = _as_features(features)
    centers = _as_features(centers)
    if num_neighbors < 1 or num_neighbors > len(features):
        raise InvalidInputError(f"K={num_neighbors} pour {len(features)} points")

    distances = euclidean_distances(features, centers)
    claimed = np.zeros(distances.shape, dtype=bool)
    for c in range(centers.shape[0]):
        nearest = np.argsort(distances[:, c], kind="stable")[:num_neighbors]
        claimed[nearest, c] = True

    indices = np.flatnonzero(claimed.any(axis=1))
    masked = np.where(claimed[indices], distances[indices], np.inf)
    return PseudoLabelSet(
        indices=indices,
        labels=masked.argmin(axis=1),
        num_clusters=centers.shape[0],
        source_stage=source_stage,
    )


# -----------------
# Métriques
# -----------------

def hungarian_mapping(pred, truth):
    """Affectation optimale id prédit → classe vraie sur la matrice de contingence."""
    pred, truth = _paired(pred, truth)
    classes, clusters = np.unique(truth), np.unique(pred)
    table = contingency_matrix(truth, pred)
    rows, cols = linear_sum_assignment(table, maximize=True)
    mapping = {int(clusters[c]): int(classes[r]) for r, c in zip(rows, cols)}
    # Clusters surnuméraires : classe majoritaire
    for c, cluster in enumerate(clusters):
        mapping.setdefault(int(cluster), int(classes[table[:, c].argmax()]))
    return mapping


def clustering_accuracy(pred, truth):
    pred, truth = _paired(pred, truth)
    table = contingency_matrix(truth, pred)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / pred.size)


def nmi(pred, truth):
    pred, truth = _paired(pred, truth)
    return float(normalized_mutual_info_score(truth, pred, average_method="geometric"))


def ari(pred, truth):
    pred, truth = _paired(pred, truth)
    return float(adjusted_rand_score(truth, pred))


def purity(pred, truth):
    pred, truth = _paired(pred, truth)
    return float(contingency_matrix(truth, pred).max(axis=0).sum() / pred.size)


def score_labels(pred, truth):
    return {
        "acc": clustering_accuracy(pred, truth),
        "nmi": nmi(pred, truth),
        "ari": ari(pred, truth),
        "purity": purity(pred, truth),
    }


def confusion_matrix(pred, truth, classes=None):
    """Lignes : classe vraie ; colonnes : prédiction ramenée par l'affectation optimale."""
    pred, truth = _paired(pred, truth)
    mapping = hungarian_mapping(pred, truth)
    mapped = np.array([mapping[int(p)] for p in pred])
    classes = np.unique(truth) if classes is None else np.asarray(classes)
    return sk_confusion_matrix(truth, mapped, labels=classes)


def silhouette(features, assignments):
    features = _as_features(features)
    assignments = _as_labels(assignments, "assignments")
    num_labels = len(np.unique(assignments))
    if num_labels < 2:
        raise InvalidInputError("La silhouette exige au moins deux clusters")
    if num_labels == len(features):
        # Que des singletons : score 0 par convention
        return 0.0
    return float(silhouette_score(features, assignments, metric="euclidean"))


def neighbor_purity(features, truth, num_neighbors):
    """Part moyenne des k plus proches voisins (soi exclu) qui partagent la classe vraie."""
    features = _as_features(features)
    truth = _as_labels(truth, "truth")
    n = len(features)
    if num_neighbors < 1 or num_neighbors >= n:
        raise InvalidInputError(f"{num_neighbors} voisins pour {n} points")

    search = NearestNeighbors(n_neighbors=num_neighbors + 1).fit(features)
    _, neighbors = search.kneighbors(features)
    keep = neighbors != np.arange(n)[:, None]
    # Soi absent de la liste (doublons) : on retire le plus lointain
    keep[keep.all(axis=1), -1] = False
    neighbors = neighbors[keep].reshape(n, num_neighbors)
    return float(np.mean(truth[neighbors] == truth[:, None]))


def mining_purity(pseudo_set, truth):
    """Part des échantillons extraits dont la pseudo-étiquette suit la classe majoritaire de son cluster."""
    truth = _as_labels(truth, "truth")
    if len(pseudo_set) == 0:
        raise InvalidInputError("Jeu pseudo-étiqueté vide")
    return purity(pseudo_set.labels, truth[pseudo_set.indices])
