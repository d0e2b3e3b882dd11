"""Partition-stability validation of fitted clustering pipelines.

Each household's raw days are shuffled and split into p parts; every part is
pushed through the same preprocessing (median, unit norm) and the pipeline's
fitted reducer, then assigned to the nearest fitted cluster center.  A part
landing on the household's original cluster counts as a match.  Averaging the
integer match counts over many shuffle trials scores how stably the whole
pipeline, not just the clustering step, represents each household.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clusterers import ClusteringResult, hardened_labels
from .dimreduce import FittedReducer, transform
from .profiles import RawDataset, build_day_matrices
from .seeding import substream


@dataclass
class ValidationReport:
    p: int
    trials: int
    n_total_cases: int
    avg_matches: float
    avg_mismatches: float
    pct_matches: float
    pct_mismatches: float
    per_household: dict[str, float]
    seed: int
    degenerate_parts: int = 0

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "trials": self.trials,
            "n_total_cases": self.n_total_cases,
            "avg_matches": self.avg_matches,
            "avg_mismatches": self.avg_mismatches,
            "pct_matches": self.pct_matches,
            "pct_mismatches": self.pct_mismatches,
            "per_household": dict(self.per_household),
            "seed": self.seed,
            "degenerate_parts": self.degenerate_parts,
        }


def _part_bounds(days: int, p: int) -> list[tuple[int, int]]:
    """Split row indices into p contiguous parts, extras going to the first parts."""
    base, extra = divmod(days, p)
    bounds = []
    start = 0
    for i in range(p):
        size = base + (1 if i < extra else 0)
        bounds.append((start, start + size))
        start += size
    return bounds


def validate_framework(
    raw: RawDataset,
    reducer: FittedReducer,
    result: ClusteringResult,
    p: int,
    trials: int = 100,
    seed: int = 0,
) -> ValidationReport:
    """Score nearest-center label agreement over shuffled day partitions.

    Every trial draws its own RNG substream from ``(seed, trial)``, so the
    report is bit-identical for a fixed seed regardless of execution order
    or parallelism.  A partition whose median profile is the zero vector
    cannot be normalized and is counted as a mismatch (and tallied in
    ``degenerate_parts``).
    """
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if result.centers.shape[0] < 2:
        raise ValueError("need at least 2 cluster centers")

    matrices = build_day_matrices(raw)
    hids = sorted(matrices)
    n = len(hids)
    labels = hardened_labels(result)
    if len(labels) != n:
        raise ValueError(f"result has {len(labels)} labels but data has {n} households")
    for hid in hids:
        if matrices[hid].rows.shape[0] < p:
            raise ValueError(
                f"household {hid!r} has {matrices[hid].rows.shape[0]} complete days, fewer than p={p}"
            )

    day_rows = [matrices[hid].rows for hid in hids]
    centers = result.centers
    total_matches = 0
    per_household = np.zeros(n, dtype=np.int64)
    degenerate = 0

    for trial in range(trials):
        rng = substream(seed, trial)
        rows = []
        owners = []
        for idx in range(n):
            days = day_rows[idx]
            shuffled = days[rng.permutation(days.shape[0])]
            for start, stop in _part_bounds(days.shape[0], p):
                med = np.median(shuffled[start:stop], axis=0)
                norm = np.linalg.norm(med)
                if norm == 0.0:
                    degenerate += 1  # counted as a mismatch below
                    continue
                rows.append(med / norm)
                owners.append(idx)
        if rows:
            Z = transform(reducer, np.array(rows))
            sq = (Z * Z).sum(axis=1)[:, None] + (centers * centers).sum(axis=1)[None, :]
            assigned = np.argmin(sq - 2.0 * Z @ centers.T, axis=1)
            owners_arr = np.array(owners)
            hits = assigned == labels[owners_arr]
            total_matches += int(hits.sum())
            np.add.at(per_household, owners_arr[hits], 1)

    n_total = p * n
    avg_matches = total_matches / trials
    pct_matches = 100.0 * total_matches / (trials * n_total)
    return ValidationReport(
        p=p,
        trials=trials,
        n_total_cases=n_total,
        avg_matches=avg_matches,
        avg_mismatches=n_total - avg_matches,
        pct_matches=pct_matches,
        pct_mismatches=100.0 - pct_matches,
        per_household={hid: per_household[i] / (trials * p) for i, hid in enumerate(hids)},
        seed=seed,
        degenerate_parts=degenerate,
    )
