"""Dimensionality reducers (PCA, feature agglomeration, identity) and elbow detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigen import jacobi_eigh
from .linkage import Merge, groups_after, merges_within_threshold, ward_linkage

KIND_PCA = "pca"
KIND_FA = "fa"
KIND_IDENTITY = "identity"


@dataclass(frozen=True)
class PcaState:
    mean: np.ndarray
    components: np.ndarray  # d_in x d_out, orthonormal columns
    eigenvalues: np.ndarray  # all d_in, descending
    cevr: np.ndarray  # cumulative explained variance ratio, length d_in


@dataclass(frozen=True)
class FaState:
    groups: tuple[tuple[int, ...], ...]  # partition of 0..d_in-1, by smallest member
    merge_trace: tuple[Merge, ...]  # full agglomeration trace over features
    threshold: float  # cost ceiling that reproduces the grouping
    stopped_by: str  # "count" or "threshold"


@dataclass(frozen=True)
class FittedReducer:
    kind: str
    d_in: int
    d_out: int
    pca_state: PcaState | None = None
    fa_state: FaState | None = None

    def to_json(self) -> dict:
        doc: dict = {"kind": self.kind, "d_in": self.d_in, "d_out": self.d_out}
        if self.pca_state is not None:
            doc["mean"] = self.pca_state.mean.tolist()
            doc["components"] = self.pca_state.components.tolist()
            doc["eigenvalues"] = self.pca_state.eigenvalues.tolist()
            doc["cevr"] = self.pca_state.cevr.tolist()
        if self.fa_state is not None:
            doc["groups"] = [list(g) for g in self.fa_state.groups]
            doc["threshold"] = self.fa_state.threshold
            doc["stopped_by"] = self.fa_state.stopped_by
        return doc

    @staticmethod
    def from_json(doc: dict) -> "FittedReducer":
        kind = doc["kind"]
        if kind == KIND_PCA:
            state = PcaState(
                mean=np.array(doc["mean"], dtype=float),
                components=np.array(doc["components"], dtype=float),
                eigenvalues=np.array(doc["eigenvalues"], dtype=float),
                cevr=np.array(doc["cevr"], dtype=float),
            )
            return FittedReducer(kind, doc["d_in"], doc["d_out"], pca_state=state)
        if kind == KIND_FA:
            state = FaState(
                groups=tuple(tuple(g) for g in doc["groups"]),
                merge_trace=(),
                threshold=float(doc["threshold"]),
                stopped_by=doc.get("stopped_by", "count"),
            )
            return FittedReducer(kind, doc["d_in"], doc["d_out"], fa_state=state)
        if kind == KIND_IDENTITY:
            return FittedReducer(kind, doc["d_in"], doc["d_out"])
        raise ValueError(f"unknown reducer kind {kind!r}")


def identity_reducer(d: int) -> FittedReducer:
    return FittedReducer(KIND_IDENTITY, d, d)


def as_matrix(data) -> np.ndarray:
    """Accept a ProfileMatrix or a plain 2-D array."""
    X = np.asarray(getattr(data, "data", data), dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    return X


def pca_fit(
    profiles,
    *,
    cevr_threshold: float | None = None,
    d_out: int | None = None,
) -> FittedReducer:
    """Fit PCA by eigendecomposition of the sample covariance (divisor n-1).

    Exactly one target must be given: either a cumulative-explained-variance
    threshold in (0, 1], which picks the smallest dimension reaching it, or
    an explicit output dimension.  Data is mean-centered before projection
    and the stored mean is reused at transform time.  Each eigenvector's sign
    is fixed so its largest-magnitude entry is positive.
    """
    X = as_matrix(profiles)
    if not np.isfinite(X).all():
        raise ValueError("input contains non-finite values")
    n, d_in = X.shape
    if n < 2:
        raise ValueError("need at least 2 rows")
    if (cevr_threshold is None) == (d_out is None):
        raise ValueError("give exactly one of cevr_threshold or d_out")

    mean = X.mean(axis=0)
    Xc = X - mean
    cov = (Xc.T @ Xc) / (n - 1)
    w, v = jacobi_eigh(cov)
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    # Sign convention: largest-magnitude entry of each eigenvector positive.
    for col in range(d_in):
        j = int(np.argmax(np.abs(v[:, col])))
        if v[j, col] < 0:
            v[:, col] = -v[:, col]

    total = float(w.sum())
    if total <= 0:
        raise ValueError("data has zero total variance")
    cevr = np.cumsum(w) / total

    if cevr_threshold is not None:
        if not 0 < cevr_threshold <= 1:
            raise ValueError(f"cevr_threshold must be in (0, 1], got {cevr_threshold}")
        d_out = int(np.argmax(cevr >= cevr_threshold - 1e-12)) + 1
    else:
        if not 1 <= d_out <= d_in:
            raise ValueError(f"d_out must be in [1, {d_in}], got {d_out}")

    state = PcaState(mean=mean, components=v[:, :d_out].copy(), eigenvalues=w, cevr=cevr)
    return FittedReducer(KIND_PCA, d_in, d_out, pca_state=state)


def fa_fit(
    profiles,
    *,
    threshold: float | None = None,
    d_out: int | None = None,
) -> FittedReducer:
    """Fit feature agglomeration: Ward merges over feature columns.

    With ``d_out`` the agglomeration stops once that many feature groups
    remain; with ``threshold`` it stops before the first merge whose cost
    would exceed it.  Merged features are pooled by arithmetic mean at
    transform time.  The full merge trace is retained for curve reports.
    """
    X = as_matrix(profiles)
    if not np.isfinite(X).all():
        raise ValueError("input contains non-finite values")
    n, d_in = X.shape
    if n < 2:
        raise ValueError("need at least 2 rows")
    if (threshold is None) == (d_out is None):
        raise ValueError("give exactly one of threshold or d_out")

    merges = ward_linkage(X.T)
    if d_out is not None:
        if not 1 <= d_out <= d_in:
            raise ValueError(f"d_out must be in [1, {d_in}], got {d_out}")
        n_merges = d_in - d_out
        stopped_by = "count"
        eff_threshold = merges[n_merges - 1].cost if n_merges else 0.0
    else:
        if threshold < 0:
            raise ValueError(f"threshold must be >= 0, got {threshold}")
        n_merges = merges_within_threshold(merges, threshold)
        d_out = d_in - n_merges
        stopped_by = "threshold"
        eff_threshold = float(threshold)

    groups = tuple(tuple(g) for g in groups_after(d_in, merges, n_merges))
    state = FaState(
        groups=groups,
        merge_trace=tuple(merges),
        threshold=eff_threshold,
        stopped_by=stopped_by,
    )
    return FittedReducer(KIND_FA, d_in, d_out, fa_state=state)


def transform(reducer: FittedReducer, X) -> np.ndarray:
    """Apply a fitted reducer to rows of ``X`` (usable on unseen rows)."""
    X = as_matrix(X)
    if X.shape[1] != reducer.d_in:
        raise ValueError(f"expected {reducer.d_in} columns, got {X.shape[1]}")
    if reducer.kind == KIND_IDENTITY:
        return X.copy()
    if reducer.kind == KIND_PCA:
        state = reducer.pca_state
        return (X - state.mean) @ state.components
    if reducer.kind == KIND_FA:
        groups = reducer.fa_state.groups
        return np.stack([X[:, list(g)].mean(axis=1) for g in groups], axis=1)
    raise ValueError(f"unknown reducer kind {reducer.kind!r}")


# ---------------------------------------------------------------------------
# Elbow detection


@dataclass(frozen=True)
class Curve:
    """A sweep curve with strictly monotone x values."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "xs", np.asarray(self.xs, dtype=float))
        object.__setattr__(self, "ys", np.asarray(self.ys, dtype=float))
        if self.xs.ndim != 1 or self.xs.shape != self.ys.shape:
            raise ValueError("xs and ys must be 1-D and the same length")
        if len(self.xs) < 2:
            raise ValueError("curve needs at least 2 points")
        dx = np.diff(self.xs)
        if not ((dx > 0).all() or (dx < 0).all()):
            raise ValueError("xs must be strictly monotone")


@dataclass(frozen=True)
class ElbowResult:
    index: int
    weak_elbow: bool


def detect_elbow(curve: Curve, weak_tol: float = 1e-9) -> ElbowResult:
    """Index of the curve point farthest from the endpoint chord.

    Both axes are min-max scaled to [0, 1] first; ties break toward the
    smaller x.  A flat chord distance (below ``weak_tol``) marks the elbow
    as weak and returns the smallest interior x.
    """
    n = len(curve.xs)
    if n < 3:
        raise ValueError("elbow detection needs at least 3 points")

    order = np.argsort(curve.xs, kind="stable")
    xs = curve.xs[order]
    ys = curve.ys[order]

    def scaled(a: np.ndarray) -> np.ndarray:
        lo, hi = a.min(), a.max()
        if hi == lo:
            return np.zeros_like(a)
        return (a - lo) / (hi - lo)

    sx = scaled(xs)
    sy = scaled(ys)
    x0, y0 = sx[0], sy[0]
    x1, y1 = sx[-1], sy[-1]
    # Perpendicular distance from each point to the chord (x0,y0)-(x1,y1).
    length = np.hypot(x1 - x0, y1 - y0)
    if length == 0:
        dist = np.zeros(n)
    else:
        dist = np.abs((y1 - y0) * sx - (x1 - x0) * sy + x1 * y0 - y1 * x0) / length

    if dist.max() <= weak_tol:
        return ElbowResult(index=int(order[1]), weak_elbow=True)
    return ElbowResult(index=int(order[int(np.argmax(dist))]), weak_elbow=False)
