"""Symmetric eigendecomposition via cyclic Jacobi rotations.

Intended for the small (at most 24x24) covariance matrices produced by the
profile pipeline, where the O(d^3) sweeps are negligible and the rotation
sequence is fully deterministic.
"""

import numpy as np


def jacobi_eigh(
    matrix: np.ndarray,
    off_tol: float = 1e-12,
    max_sweeps: int = 100,
) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize a symmetric matrix with cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors in columns,
    in no particular order.  Sweeps stop once every off-diagonal magnitude
    drops below ``off_tol`` (or below machine precision relative to the
    matrix scale, whichever is larger, so badly scaled inputs still
    terminate).
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    if not np.allclose(a, a.T, atol=1e-10 * max(1.0, np.abs(a).max())):
        raise ValueError("matrix must be symmetric")
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return np.diag(a).copy(), v

    tol = max(off_tol, 1e-15 * np.linalg.norm(a))
    for _ in range(max_sweeps):
        off = np.abs(a - np.diag(np.diag(a))).max()
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] != 0.0:
                    _rotate(a, v, p, q)
    return np.diag(a).copy(), v


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    apq = a[p, q]
    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
    if theta == 0.0:
        t = 1.0
    else:
        t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c

    n = a.shape[0]
    app, aqq = a[p, p], a[q, q]
    a[p, p] = app - t * apq
    a[q, q] = aqq + t * apq
    a[p, q] = a[q, p] = 0.0

    idx = np.array([i for i in range(n) if i != p and i != q], dtype=int)
    if idx.size:
        aip = a[idx, p].copy()
        aiq = a[idx, q].copy()
        a[idx, p] = a[p, idx] = c * aip - s * aiq
        a[idx, q] = a[q, idx] = s * aip + c * aiq

    vp = v[:, p].copy()
    vq = v[:, q].copy()
    v[:, p] = c * vp - s * vq
    v[:, q] = s * vp + c * vq
