import numpy as np
import pytest


def make_blobs(centers, per=20, spread=0.4, seed=0):
    """Seeded Gaussian blobs with ground-truth labels."""
    rng = np.random.default_rng(seed)
    points = []
    labels = []
    for i, c in enumerate(centers):
        points.append(rng.normal(loc=c, scale=spread, size=(per, len(c))))
        labels.extend([i] * per)
    return np.vstack(points), np.array(labels)


def agree_up_to_permutation(labels_a, labels_b) -> bool:
    """True when two labelings induce the same partition."""
    labels_a = np.asarray(labels_a)
    labels_b = np.asarray(labels_b)
    if labels_a.shape != labels_b.shape:
        return False
    same_a = labels_a[:, None] == labels_a[None, :]
    same_b = labels_b[:, None] == labels_b[None, :]
    return bool((same_a == same_b).all())


@pytest.fixture
def blobs3():
    return make_blobs([(0, 0), (8, 0), (4, 7)], per=15, spread=0.4, seed=1)
