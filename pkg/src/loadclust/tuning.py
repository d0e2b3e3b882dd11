"""Hyperparameter selection: gap statistic, FPC sweep, fuzzifier estimation, merge-cost elbow."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .clusterers import (
    MAX_CLUSTERS,
    ClusteringResult,
    centroids_from_labels,
    fcm,
    hardened_labels,
)
from .dimreduce import Curve, as_matrix, detect_elbow
from .linkage import ward_linkage
from .seeding import child_seed, substream

ClustererHandle = Callable[[np.ndarray, int, int], ClusteringResult]


@dataclass
class TuningResult:
    method: str
    best_value: float | int
    curve: Curve
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "best_value": self.best_value,
            "curve": {"xs": self.curve.xs.tolist(), "ys": self.curve.ys.tolist()},
            "details": _jsonable(self.details),
        }


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


def _pooled_within_ss(X: np.ndarray, labels: np.ndarray, k: int) -> float:
    centroids = centroids_from_labels(X, labels, k)
    return float(((X - centroids[labels]) ** 2).sum())


def gap_statistic(
    X,
    clusterer: ClustererHandle,
    k_max: int,
    n_refs: int = 20,
    seed: int = 0,
) -> TuningResult:
    """Tibshirani-style gap statistic with uniform bounding-box references.

    For every k in 1..k_max, gap(k) is the mean log pooled within-cluster
    dispersion of the reference sets minus the data's.  The best k is the
    plain argmax, ties toward the smaller k.  Reference sets are drawn once
    from seeded substreams, so the result is independent of evaluation order.
    """
    X = as_matrix(X)
    n = X.shape[0]
    if not 2 <= k_max <= MAX_CLUSTERS:
        raise ValueError(f"k_max must be in [2, {MAX_CLUSTERS}], got {k_max}")
    if k_max > n:
        raise ValueError(f"k_max must not exceed the number of points ({n})")
    if n_refs < 1:
        raise ValueError(f"n_refs must be >= 1, got {n_refs}")

    lo = X.min(axis=0)
    hi = X.max(axis=0)
    refs = [substream(seed, 0, r).uniform(lo, hi, size=X.shape) for r in range(n_refs)]

    def log_w(data: np.ndarray, k: int, s: int) -> float:
        if k == 1:
            w = float(((data - data.mean(axis=0)) ** 2).sum())
        else:
            result = clusterer(data, k, s)
            labels = hardened_labels(result)
            w = _pooled_within_ss(data, labels, result.k)
        return float(np.log(max(w, 1e-300)))

    ks = list(range(1, k_max + 1))
    log_w_data = np.array([log_w(X, k, child_seed(seed, 1, k, 0)) for k in ks])
    log_w_refs = np.array(
        [[log_w(refs[r], k, child_seed(seed, 1, k, r + 1)) for r in range(n_refs)] for k in ks]
    )
    gaps = log_w_refs.mean(axis=1) - log_w_data
    best = ks[int(np.argmax(gaps))]
    return TuningResult(
        method="gap",
        best_value=best,
        curve=Curve(np.array(ks, dtype=float), gaps),
        details={
            "log_w_data": log_w_data,
            "ref_log_w_mean": log_w_refs.mean(axis=1),
            "ref_log_w_std": log_w_refs.std(axis=1),
            "n_refs": n_refs,
        },
    )


def fpc(memberships: np.ndarray) -> float:
    """Fuzzy partition coefficient, (1/n) * sum of squared memberships."""
    U = np.asarray(memberships, dtype=float)
    return float((U**2).sum() / U.shape[0])


def fpc_sweep(X, m: float, k_range: Iterable[int], seed: int = 0) -> TuningResult:
    """Run fuzzy c-means across cluster counts and pick the FPC maximum.

    Ties go to the smaller k.
    """
    X = as_matrix(X)
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise ValueError("empty k_range")
    if ks[0] < 2 or ks[-1] > MAX_CLUSTERS:
        raise ValueError(f"k_range must lie within [2, {MAX_CLUSTERS}]")

    values = []
    converged = []
    for k in ks:
        result = fcm(X, k, m, seed=child_seed(seed, k))
        values.append(fpc(result.memberships))
        converged.append(result.converged)
    best = ks[int(np.argmax(values))]
    return TuningResult(
        method="fpc",
        best_value=best,
        curve=Curve(np.array(ks, dtype=float), np.array(values)),
        details={"converged": converged, "fuzzifier": m},
    )


def estimate_fuzzifier(
    X,
    *,
    target_fraction: float = 0.75,
    m_max: float = 10.0,
    tol: float = 1e-4,
) -> TuningResult:
    """Empirical fuzzifier choice from the spread of pairwise coefficients.

    Treating every other point as a candidate center, each point j gets the
    coefficients u_jl = d_jl^(-2/(m-1)) / sum_l' d_jl'^(-2/(m-1)), the same
    form the membership update uses.  Their pooled coefficient of variation
    falls monotonically from sqrt(n-2) (the crisp limit at m -> 1) toward 0
    as m grows; the fuzzifier is the m at which it drops to
    ``target_fraction`` of the crisp-limit value, found by bisection on
    (1, m_max] to ``tol``.  If the crossing lies outside the range the
    fallback m = 2 is returned with a ``fallback`` flag in the details.
    """
    X = as_matrix(X)
    n = X.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    if not 0 < target_fraction < 1:
        raise ValueError(f"target_fraction must be in (0, 1), got {target_fraction}")
    target_cv = target_fraction * float(np.sqrt(n - 2))

    sq = (X * X).sum(axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)
    offdiag = ~np.eye(n, dtype=bool)
    with np.errstate(divide="ignore"):
        log_d2 = np.log(d2[offdiag].reshape(n, n - 1))  # -inf marks coincident pairs

    def cv(m: float) -> float:
        z = (-1.0 / (m - 1.0)) * log_d2  # log of d^(-2/(m-1))
        u = np.empty_like(z)
        for j in range(n):
            row = z[j]
            peak = row.max()
            if np.isposinf(peak):
                # Coincident pairs dominate: split mass equally among them.
                u[j] = np.where(np.isposinf(row), 1.0, 0.0)
                u[j] /= u[j].sum()
            else:
                w = np.exp(row - peak)
                u[j] = w / w.sum()
        mean = u.mean()
        return float(u.std() / mean) if mean > 0 else 0.0

    lo = 1.0 + 1e-9
    hi = float(m_max)
    f_lo = cv(lo) - target_cv
    f_hi = cv(hi) - target_cv
    grid = np.linspace(1.05, hi, 40)
    curve = Curve(grid, np.array([cv(m) for m in grid]))

    if f_lo <= 0 or f_hi > 0:
        return TuningResult(
            method="fuzzifier",
            best_value=2.0,
            curve=curve,
            details={"fallback": True, "target_fraction": target_fraction, "target_cv": target_cv},
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if cv(mid) - target_cv > 0:
            lo = mid
        else:
            hi = mid
    best = 0.5 * (lo + hi)
    return TuningResult(
        method="fuzzifier",
        best_value=float(best),
        curve=curve,
        details={
            "fallback": False,
            "target_fraction": target_fraction,
            "target_cv": target_cv,
            "cv_at_best": cv(best),
        },
    )


def elbow_k_for_ac(X, k_max: int) -> TuningResult:
    """Cluster count for Ward agglomeration via the merge-cost elbow.

    The curve maps each candidate k to the cost of the merge that produced
    k clusters; the elbow index picks k (floored at 2, since downstream
    clustering needs at least two clusters).
    """
    X = as_matrix(X)
    n = X.shape[0]
    if not 2 <= k_max <= min(n, MAX_CLUSTERS):
        raise ValueError(f"k_max must be in [2, {min(n, MAX_CLUSTERS)}], got {k_max}")

    merges = ward_linkage(X)
    ks = list(range(1, min(k_max, n - 1) + 1))
    costs = np.array([merges[n - k - 1].cost for k in ks])
    curve = Curve(np.array(ks, dtype=float), costs)
    if len(ks) < 3:
        # Too short for a chord: no elbow is detectable.
        return TuningResult("ac_elbow", 2, curve, details={"weak_elbow": True})
    elbow = detect_elbow(curve)
    best = max(2, ks[elbow.index])
    return TuningResult(
        method="ac_elbow",
        best_value=best,
        curve=curve,
        details={"weak_elbow": elbow.weak_elbow},
    )
