"""Ward-criterion agglomeration, shared by feature pooling and sample clustering.

The merge cost between clusters with means ``m_a``, ``m_b`` and sizes
``s_a``, ``s_b`` is the increase in total within-cluster sum of squares,

    cost = s_a * s_b / (s_a + s_b) * ||m_a - m_b||^2,

updated after each merge through the Lance-Williams recurrence.  Costs along
the trace are nondecreasing (Ward reducibility), and ties always pick the
lexicographically smallest slot pair, so the trace is deterministic.
"""

from typing import NamedTuple

import numpy as np


class Merge(NamedTuple):
    """One agglomeration step.

    Cluster ids follow the usual linkage convention: ids ``0..n-1`` are the
    original rows and the merge at trace index ``i`` creates cluster ``n+i``.
    """

    cost: float
    left: int
    right: int


def ward_linkage(X: np.ndarray) -> list[Merge]:
    """Fully agglomerate the rows of ``X`` and return the merge trace."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 rows to agglomerate")
    if not np.isfinite(X).all():
        raise ValueError("input contains non-finite values")

    # Initial pair costs: 0.5 * squared Euclidean distance between rows.
    sq = (X * X).sum(axis=1)
    cost = 0.5 * np.maximum(sq[:, None] + sq[None, :] - 2.0 * (X @ X.T), 0.0)
    np.fill_diagonal(cost, np.inf)

    sizes = np.ones(n)
    ids = list(range(n))
    merges: list[Merge] = []

    for step in range(n - 1):
        flat = int(np.argmin(cost))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        c = float(cost[i, j])
        merges.append(Merge(c, min(ids[i], ids[j]), max(ids[i], ids[j])))

        si, sj = sizes[i], sizes[j]
        sl = sizes
        with np.errstate(invalid="ignore"):
            merged = ((si + sl) * cost[i] + (sj + sl) * cost[j] - sl * c) / (si + sj + sl)
        cost[i, :] = merged
        cost[:, i] = merged
        cost[i, i] = np.inf
        cost[j, :] = np.inf
        cost[:, j] = np.inf

        sizes[i] = si + sj
        ids[i] = n + step
    return merges


def merges_within_threshold(merges: list[Merge], threshold: float) -> int:
    """Number of leading merges whose cost does not exceed ``threshold``."""
    count = 0
    for m in merges:
        if m.cost > threshold:
            break
        count += 1
    return count


def labels_after(n_leaves: int, merges: list[Merge], n_merges: int) -> np.ndarray:
    """Cluster labels after applying the first ``n_merges`` merges.

    Clusters are numbered 0..k-1 in order of their smallest member row.
    """
    groups = groups_after(n_leaves, merges, n_merges)
    labels = np.empty(n_leaves, dtype=int)
    for ci, members in enumerate(groups):
        labels[members] = ci
    return labels


def groups_after(n_leaves: int, merges: list[Merge], n_merges: int) -> list[list[int]]:
    """Partition of rows after ``n_merges`` merges, ordered by smallest member."""
    if not 0 <= n_merges <= len(merges):
        raise ValueError(f"n_merges must be in [0, {len(merges)}], got {n_merges}")
    members: dict[int, list[int]] = {i: [i] for i in range(n_leaves)}
    for step in range(n_merges):
        m = merges[step]
        merged = members.pop(m.left) + members.pop(m.right)
        members[n_leaves + step] = merged
    groups = [sorted(g) for g in members.values()]
    groups.sort(key=lambda g: g[0])
    return groups
