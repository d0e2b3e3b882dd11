"""Clustering validity indices: silhouette, Calinski-Harabasz, Dunn, Davies-Bouldin, Xie-Beni.

All five can be evaluated in whichever feature space is supplied (reduced or
original profiles).  Degenerate denominators (zero within-cluster scatter,
coincident centers, zero diameters) yield an infinity sentinel instead of an
error so framework comparisons never abort.  Labels are canonicalized by
first appearance before computing, which makes every index bitwise invariant
under cluster relabeling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clusterers import ClusteringResult, centroids_from_labels, hardened_labels
from .dimreduce import as_matrix

SPACE_REDUCED = "reduced"
SPACE_ORIGINAL = "original"

CVI_COLUMNS = ["SH", "CH", "DI", "DB", "XB"]


@dataclass(frozen=True)
class CviScores:
    silhouette: float
    calinski_harabasz: float
    dunn: float
    davies_bouldin: float
    xie_beni: float
    feature_space: str

    def values(self) -> list[float]:
        """Values in the standard column order SH, CH, DI, DB, XB."""
        return [
            self.silhouette,
            self.calinski_harabasz,
            self.dunn,
            self.davies_bouldin,
            self.xie_beni,
        ]

    def to_json(self) -> dict:
        return {
            "SH": self.silhouette,
            "CH": self.calinski_harabasz,
            "DI": self.dunn,
            "DB": self.davies_bouldin,
            "XB": self.xie_beni,
            "feature_space": self.feature_space,
        }


def _canonical_labels(labels) -> tuple[np.ndarray, int]:
    """Relabel clusters in order of first appearance (0..k-1)."""
    labels = np.asarray(labels, dtype=int)
    mapping: dict[int, int] = {}
    out = np.empty_like(labels)
    for i, lab in enumerate(labels):
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out, len(mapping)


def _pairwise_distances(X: np.ndarray) -> np.ndarray:
    sq = (X * X).sum(axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(d2)


def silhouette(X, labels) -> float:
    """Mean silhouette width; singleton clusters contribute 0."""
    X = as_matrix(X)
    labels, k = _canonical_labels(labels)
    if k < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    n = X.shape[0]
    dist = _pairwise_distances(X)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    counts = onehot.sum(axis=0)
    sums = dist @ onehot  # n x k: total distance from each point to each cluster

    scores = np.zeros(n)
    for j in range(n):
        own = labels[j]
        if counts[own] <= 1:
            continue  # singleton: defined as 0
        a = sums[j, own] / (counts[own] - 1)
        others = [sums[j, c] / counts[c] for c in range(k) if c != own]
        b = min(others)
        denom = max(a, b)
        scores[j] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


def calinski_harabasz(X, labels) -> float:
    """Variance ratio criterion (B/(k-1)) / (W/(n-k)); W=0 yields infinity."""
    X = as_matrix(X)
    labels, k = _canonical_labels(labels)
    n = X.shape[0]
    if not 2 <= k < n:
        raise ValueError(f"calinski_harabasz needs 2 <= k < n, got k={k}, n={n}")
    mu = X.mean(axis=0)
    centroids = centroids_from_labels(X, labels, k)
    counts = np.bincount(labels, minlength=k)
    between = float((counts * ((centroids - mu) ** 2).sum(axis=1)).sum())
    within = float(((X - centroids[labels]) ** 2).sum())
    if within == 0.0:
        return float("inf")
    return (between / (k - 1)) / (within / (n - k))


def dunn_index(X, labels) -> float:
    """Minimum inter-cluster distance over maximum cluster diameter."""
    X = as_matrix(X)
    labels, k = _canonical_labels(labels)
    if k < 2:
        raise ValueError("dunn_index needs at least 2 clusters")
    dist = _pairwise_distances(X)
    same = labels[:, None] == labels[None, :]
    inter = dist.copy()
    inter[same] = np.inf
    min_inter = float(inter.min())
    intra = dist.copy()
    intra[~same] = 0.0
    max_diam = float(intra.max())
    if max_diam == 0.0:
        return float("inf")
    return min_inter / max_diam


def davies_bouldin(X, labels) -> float:
    """Mean over clusters of the worst (c_i + c_j) / ||mu_i - mu_j|| ratio."""
    X = as_matrix(X)
    labels, k = _canonical_labels(labels)
    if k < 2:
        raise ValueError("davies_bouldin needs at least 2 clusters")
    centroids = centroids_from_labels(X, labels, k)
    compact = np.zeros(k)
    for c in range(k):
        members = X[labels == c]
        compact[c] = np.sqrt(((members - centroids[c]) ** 2).sum(axis=1)).mean()

    worst = np.zeros(k)
    for i in range(k):
        best = 0.0
        for j in range(k):
            if j == i:
                continue
            sep = float(np.linalg.norm(centroids[i] - centroids[j]))
            num = compact[i] + compact[j]
            if sep == 0.0:
                sim = 0.0 if num == 0.0 else float("inf")
            else:
                sim = num / sep
            best = max(best, sim)
        worst[i] = best
    return float(worst.mean())


def xie_beni(X, result: ClusteringResult) -> float:
    """Compactness over squared minimum center separation.

    Centers are recomputed from the labels (or memberships) in the supplied
    feature space, so the index is well defined in the original profile space
    as well as the reduced one.  With memberships present the compactness is
    the fuzzifier-weighted mean squared distance.
    """
    X = as_matrix(X)
    n = X.shape[0]
    if result.k < 2:
        raise ValueError("xie_beni needs at least 2 clusters")
    if result.memberships is not None:
        if result.fuzzifier is None:
            raise ValueError("memberships without a fuzzifier")
        U = np.asarray(result.memberships, dtype=float)
        W = U**result.fuzzifier
        weights = W.sum(axis=0)
        if (weights == 0).any():
            return float("inf")
        centers = (W.T @ X) / weights[:, None]
        sq = (X * X).sum(axis=1)[:, None] + (centers * centers).sum(axis=1)[None, :]
        sq = np.maximum(sq - 2.0 * X @ centers.T, 0.0)
        numerator = float((W * sq).sum()) / n
    else:
        labels, k = _canonical_labels(result.labels)
        centers = centroids_from_labels(X, labels, k)
        numerator = float(((X - centers[labels]) ** 2).sum()) / n

    k = centers.shape[0]
    sep = np.inf
    for i in range(k):
        for j in range(i + 1, k):
            sep = min(sep, float(((centers[i] - centers[j]) ** 2).sum()))
    if sep == 0.0:
        return float("inf")
    if numerator == 0.0:
        return 0.0
    return numerator / sep


def all_indices(X, result: ClusteringResult, feature_space: str) -> CviScores:
    """All five indices in one feature space.

    Fuzzy results are hardened by max membership for SH, CH, DI, and DB;
    Xie-Beni uses the fuzzy path whenever memberships exist.
    """
    if feature_space not in (SPACE_REDUCED, SPACE_ORIGINAL):
        raise ValueError(f"unknown feature space {feature_space!r}")
    X = as_matrix(X)
    labels = hardened_labels(result)
    return CviScores(
        silhouette=silhouette(X, labels),
        calinski_harabasz=calinski_harabasz(X, labels),
        dunn=dunn_index(X, labels),
        davies_bouldin=davies_bouldin(X, labels),
        xie_beni=xie_beni(X, result),
        feature_space=feature_space,
    )
