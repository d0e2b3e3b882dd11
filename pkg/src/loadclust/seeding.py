"""Deterministic RNG substream derivation.

Every randomized operation takes an integer seed and derives independent
streams for its internal pieces (restarts, trials, reference sets) from
``(seed, *path)``.  Streams depend only on their path, never on the order
in which they are created or on any concurrency, so results are
bit-reproducible regardless of worker count.
"""

import hashlib

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Generator for the (seed, *path) substream."""
    return np.random.default_rng(np.random.SeedSequence(_entropy(seed, *path)))


def child_seed(seed: int, *path: int) -> int:
    """Derive an integer seed for APIs that take one."""
    ss = np.random.SeedSequence(_entropy(seed, *path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def child_seed_for(seed: int, label: str) -> int:
    """Integer seed keyed by a stable string label (framework names etc.)."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return child_seed(seed, int.from_bytes(digest[:8], "big"))


def _entropy(seed: int, *path: int) -> list[int]:
    return [s & 0xFFFFFFFFFFFFFFFF for s in (seed, *path)]
