"""Clustering algorithms (k-means, spectral, agglomerative, fuzzy c-means).

All four return the same result type exposing hard labels and cluster
centers in the fitted feature space; fuzzy c-means additionally carries the
membership matrix.  Everything is deterministic given the data, the
hyperparameters, and the seed, and every tie (nearest center, best restart,
argmax membership) breaks toward the lower index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dimreduce import as_matrix
from .errors import DegenerateGeometryError
from .linkage import labels_after, merges_within_threshold, ward_linkage
from .seeding import substream

METHOD_KMC = "KMC"
METHOD_SC = "SC"
METHOD_AC = "AC"
METHOD_FCM = "FCM"

MAX_CLUSTERS = 10


@dataclass
class ClusteringResult:
    """Labels, centers, and method-specific extras for one fitted clustering."""

    labels: np.ndarray
    centers: np.ndarray
    k: int
    method: str
    objective: float
    memberships: np.ndarray | None = None
    fuzzifier: float | None = None
    converged: bool = True
    warnings: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=int)
        self.centers = np.asarray(self.centers, dtype=float)
        if self.centers.shape[0] != self.k:
            raise ValueError(f"expected {self.k} centers, got {self.centers.shape[0]}")
        if self.labels.min() < 0 or self.labels.max() >= self.k:
            raise ValueError(f"labels must lie in [0, {self.k})")
        if self.memberships is not None:
            self.memberships = np.asarray(self.memberships, dtype=float)
            if self.memberships.shape != (len(self.labels), self.k):
                raise ValueError("memberships must be n x k")
            sums = self.memberships.sum(axis=1)
            if np.abs(sums - 1.0).max() > 1e-9:
                raise ValueError("membership rows must sum to 1")
            if self.memberships.min() < 0 or self.memberships.max() > 1:
                raise ValueError("memberships must lie in [0, 1]")
        else:
            counts = np.bincount(self.labels, minlength=self.k)
            if (counts == 0).any():
                empty = int(np.argmin(counts))
                raise ValueError(f"cluster {empty} is empty")

    def to_json(self) -> dict:
        doc = {
            "method": self.method,
            "k": self.k,
            "labels": self.labels.tolist(),
            "centers": self.centers.tolist(),
            "objective": self.objective,
            "converged": self.converged,
            "warnings": list(self.warnings),
            "extra": dict(self.extra),
        }
        if self.memberships is not None:
            doc["memberships"] = self.memberships.tolist()
        if self.fuzzifier is not None:
            doc["fuzzifier"] = self.fuzzifier
        return doc

    @staticmethod
    def from_json(doc: dict) -> "ClusteringResult":
        memberships = doc.get("memberships")
        return ClusteringResult(
            labels=np.array(doc["labels"], dtype=int),
            centers=np.array(doc["centers"], dtype=float),
            k=int(doc["k"]),
            method=doc["method"],
            objective=float(doc["objective"]),
            memberships=None if memberships is None else np.array(memberships, dtype=float),
            fuzzifier=doc.get("fuzzifier"),
            converged=bool(doc.get("converged", True)),
            warnings=list(doc.get("warnings", [])),
            extra=dict(doc.get("extra", {})),
        )


def _check_matrix(X) -> np.ndarray:
    X = as_matrix(X)
    if not np.isfinite(X).all():
        raise ValueError("input contains non-finite values")
    return X


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, n x k, clipped at zero."""
    sq = (X * X).sum(axis=1)[:, None] + (C * C).sum(axis=1)[None, :] - 2.0 * X @ C.T
    return np.maximum(sq, 0.0)


def centroids_from_labels(X, labels, k: int | None = None) -> np.ndarray:
    """Arithmetic cluster means; every cluster in [0, k) must be nonempty."""
    X = _check_matrix(X)
    labels = np.asarray(labels, dtype=int)
    if k is None:
        k = int(labels.max()) + 1
    counts = np.bincount(labels, minlength=k)
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    if (counts == 0).any():
        raise ValueError(f"cluster {int(np.argmin(counts))} is empty")
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, labels, X)
    return sums / counts[:, None]


def hardened_labels(result: ClusteringResult) -> np.ndarray:
    """Argmax-membership labels for fuzzy results; hard labels pass through."""
    if result.memberships is not None:
        return np.argmax(result.memberships, axis=1)
    return result.labels.copy()


# ---------------------------------------------------------------------------
# K-means


def kmeans(
    X,
    k: int,
    restarts: int = 10,
    max_iter: int = 300,
    tol: float = 1e-9,
    seed: int = 0,
) -> ClusteringResult:
    """Lloyd iterations with k-means++ seeding, best of ``restarts`` runs.

    Each restart draws from an independent substream of ``seed``; the run
    with the lowest sum of squared distances wins, ties going to the lowest
    restart index.  An empty cluster is reseeded at the point farthest from
    its current center.
    """
    X = _check_matrix(X)
    n = X.shape[0]
    if not 2 <= k <= min(n, MAX_CLUSTERS):
        raise ValueError(f"k must be in [2, {min(n, MAX_CLUSTERS)}], got {k}")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")

    best = None
    for r in range(restarts):
        rng = substream(seed, r)
        labels, centers, sse, converged = _lloyd(X, k, rng, max_iter, tol)
        if best is None or sse < best[2]:
            best = (labels, centers, sse, converged)
    labels, centers, sse, converged = best
    return ClusteringResult(
        labels=labels,
        centers=centers,
        k=k,
        method=METHOD_KMC,
        objective=float(sse),
        converged=converged,
    )


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[int(rng.integers(n))]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            target = rng.random() * total
            idx = min(int(np.searchsorted(np.cumsum(d2), target, side="right")), n - 1)
        centers[c] = X[idx]
        d2 = np.minimum(d2, ((X - centers[c]) ** 2).sum(axis=1))
    return centers


def _lloyd(X, k, rng, max_iter, tol):
    centers = _kmeans_pp(X, k, rng)
    labels = None
    converged = False
    for _ in range(max_iter):
        new_labels = np.argmin(_sq_dists(X, centers), axis=1)
        new_centers = _update_centers(X, new_labels, centers, k)
        if labels is not None and np.array_equal(new_labels, labels):
            labels, centers = new_labels, new_centers
            converged = True
            break
        movement = np.abs(new_centers - centers).max()
        labels, centers = new_labels, new_centers
        if movement < tol:
            labels = np.argmin(_sq_dists(X, centers), axis=1)
            centers = _update_centers(X, labels, centers, k)
            converged = True
            break
    sse = float(((X - centers[labels]) ** 2).sum())
    return labels, centers, sse, converged


def _update_centers(X, labels, prev_centers, k):
    counts = np.bincount(labels, minlength=k)
    centers = np.zeros_like(prev_centers)
    np.add.at(centers, labels, X)
    for ci in range(k):
        if counts[ci] > 0:
            centers[ci] /= counts[ci]
        else:
            # Reseed an emptied cluster at the point farthest from its center.
            far = int(np.argmax(((X - prev_centers[ci]) ** 2).sum(axis=1)))
            centers[ci] = X[far]
    return centers


# ---------------------------------------------------------------------------
# Spectral clustering


def default_knn(n: int) -> int:
    return max(2, int(np.floor(np.log(n))) + 1)


def spectral(X, k: int, knn: int | None = None, seed: int = 0, restarts: int = 10) -> ClusteringResult:
    """Unnormalized-Laplacian spectral clustering on a symmetrized kNN graph.

    The graph joins each point to its ``knn`` nearest neighbours (union
    symmetrization, binary weights).  The embedding is the k eigenvectors of
    L = D - A with smallest eigenvalues; k-means on the embedding gives the
    labels, and the reported centers are arithmetic centroids of the input
    rows per label.  More graph components than clusters is recorded as a
    warning rather than an error.
    """
    X = _check_matrix(X)
    n = X.shape[0]
    if not 2 <= k <= MAX_CLUSTERS:
        raise ValueError(f"k must be in [2, {MAX_CLUSTERS}], got {k}")
    if k > n:
        raise ValueError(f"k must not exceed the number of points ({n})")
    if knn is None:
        knn = default_knn(n)
    if not 1 <= knn < n:
        raise ValueError(f"knn must be in [1, {n - 1}], got {knn}")

    d2 = _sq_dists(X, X)
    np.fill_diagonal(d2, np.inf)
    if not (d2[np.isfinite(d2)] > 0).any():
        raise DegenerateGeometryError("degenerate geometry: all points identical")

    order = np.argsort(d2, axis=1, kind="stable")
    adj = np.zeros((n, n))
    rows = np.repeat(np.arange(n), knn)
    adj[rows, order[:, :knn].ravel()] = 1.0
    adj = np.maximum(adj, adj.T)

    laplacian = np.diag(adj.sum(axis=1)) - adj
    _, vecs = np.linalg.eigh(laplacian)
    embedding = vecs[:, :k].copy()
    for col in range(k):
        j = int(np.argmax(np.abs(embedding[:, col])))
        if embedding[j, col] < 0:
            embedding[:, col] = -embedding[:, col]

    warnings = []
    n_components = _count_components(adj)
    if n_components > k:
        warnings.append(
            f"kNN graph has {n_components} connected components for k={k}; "
            "smallest eigenvalues are degenerate"
        )

    km = kmeans(embedding, k, restarts=max(restarts, 10), seed=seed)
    centers = centroids_from_labels(X, km.labels, k)
    return ClusteringResult(
        labels=km.labels,
        centers=centers,
        k=k,
        method=METHOD_SC,
        objective=km.objective,
        converged=km.converged,
        warnings=warnings,
        extra={"knn": knn, "graph_components": n_components},
    )


def _count_components(adj: np.ndarray) -> int:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    components = 0
    for start in range(n):
        if seen[start]:
            continue
        components += 1
        stack = [start]
        seen[start] = True
        while stack:
            node = stack.pop()
            for nbr in np.flatnonzero(adj[node]):
                if not seen[nbr]:
                    seen[nbr] = True
                    stack.append(int(nbr))
    return components


# ---------------------------------------------------------------------------
# Agglomerative clustering


def agglomerative(X, *, k: int | None = None, threshold: float | None = None) -> ClusteringResult:
    """Ward-linkage agglomeration of sample rows.

    Stops either at ``k`` remaining clusters or before the first merge whose
    cost would exceed ``threshold``.  The objective is the last accepted
    merge cost and the full cost trace is kept in ``extra["merge_costs"]``
    for elbow-based cluster-count selection.
    """
    X = _check_matrix(X)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 rows")
    if (k is None) == (threshold is None):
        raise ValueError("give exactly one of k or threshold")

    merges = ward_linkage(X)
    if k is not None:
        if not 1 <= k <= n:
            raise ValueError(f"k must be in [1, {n}], got {k}")
        n_merges = n - k
    else:
        if threshold < 0:
            raise ValueError(f"threshold must be >= 0, got {threshold}")
        n_merges = merges_within_threshold(merges, threshold)

    labels = labels_after(n, merges, n_merges)
    k_eff = int(labels.max()) + 1
    centers = centroids_from_labels(X, labels, k_eff)
    objective = merges[n_merges - 1].cost if n_merges else 0.0
    return ClusteringResult(
        labels=labels,
        centers=centers,
        k=k_eff,
        method=METHOD_AC,
        objective=float(objective),
        extra={"merge_costs": [m.cost for m in merges]},
    )


# ---------------------------------------------------------------------------
# Fuzzy c-means


def fcm(
    X,
    k: int,
    m: float,
    max_iter: int = 300,
    tol: float = 1e-6,
    seed: int = 0,
) -> ClusteringResult:
    """Fuzzy c-means from seeded random membership initialization.

    Alternates the fuzzy-centroid update v_i = sum_j u_ij^m x_j / sum_j u_ij^m
    with the membership update u_ij = 1 / sum_l (d_ij / d_lj)^(2/(m-1)),
    stopping when the largest membership change drops below ``tol``.  A point
    coincident with a center gets membership 1 there (lowest such center) and
    0 elsewhere.  Non-convergence within ``max_iter`` is reported through the
    ``converged`` flag, not an error.
    """
    X = _check_matrix(X)
    n = X.shape[0]
    if m <= 1:
        raise ValueError(f"fuzzifier m must be > 1, got {m}")
    if not 2 <= k <= min(n, MAX_CLUSTERS):
        raise ValueError(f"k must be in [2, {min(n, MAX_CLUSTERS)}], got {k}")

    rng = substream(seed)
    U = rng.random((n, k))
    U /= U.sum(axis=1, keepdims=True)

    centers = _fuzzy_centers(X, U, m, fallback=X[rng.integers(n, size=k)])
    converged = False
    for _ in range(max_iter):
        d2 = _sq_dists(X, centers)
        U_new = _fcm_memberships(d2, m)
        delta = np.abs(U_new - U).max()
        U = U_new
        centers = _fuzzy_centers(X, U, m, fallback=centers)
        if delta < tol:
            converged = True
            break

    d2 = _sq_dists(X, centers)
    objective = float((U**m * d2).sum())
    labels = np.argmax(U, axis=1)
    warnings = []
    if (np.bincount(labels, minlength=k) == 0).any():
        warnings.append("some clusters hold no point under max-membership labels")
    return ClusteringResult(
        labels=labels,
        centers=centers,
        k=k,
        method=METHOD_FCM,
        objective=objective,
        memberships=U,
        fuzzifier=float(m),
        converged=converged,
        warnings=warnings,
    )


def _fcm_memberships(d2: np.ndarray, m: float) -> np.ndarray:
    expo = 1.0 / (m - 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        inv = d2 ** (-expo)
    U = np.empty_like(d2)
    finite = np.isfinite(inv).all(axis=1)
    if finite.any():
        U[finite] = inv[finite] / inv[finite].sum(axis=1, keepdims=True)
    for j in np.flatnonzero(~finite):
        # Coincident with a center (or numerically so): snap to the nearest.
        U[j] = 0.0
        U[j, int(np.argmin(d2[j]))] = 1.0
    return U


def _fuzzy_centers(X, U, m, fallback) -> np.ndarray:
    W = U**m
    weights = W.sum(axis=0)
    centers = np.array(fallback, dtype=float, copy=True)
    ok = weights > 0
    if ok.any():
        centers[ok] = (W.T[ok] @ X) / weights[ok, None]
    return centers
