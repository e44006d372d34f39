"""Dense linear-algebra helpers: SVD factors, random orthogonal and DCT matrices.

Everything here operates on plain numpy arrays at desk scale (dimensions up
to ~1000). Randomness flows through counter-based Philox generators so that
results are reproducible regardless of how work is partitioned.
"""

from dataclasses import dataclass

import numpy as np


def rng_from_seed(seed):
    """Counter-based generator; a trial's stream is fully determined by its seed."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed & (2**64 - 1))))


@dataclass(frozen=True, eq=False)
class SvdFactors:
    """Thin SVD A = U diag(s) V^T with orthonormal U, V columns."""

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    def reconstruct(self):
        return (self.U * self.singular_values) @ self.V.T


def matvec(A, v):
    A = np.asarray(A, dtype=float)
    v = np.asarray(v, dtype=float)
    if A.ndim != 2 or v.ndim != 1 or A.shape[1] != v.shape[0]:
        raise ValueError(f"matvec shape mismatch: A is {A.shape}, v has length {v.shape}")
    return A @ v


def svd(A):
    """Full-rank thin SVD (r = min(rows, cols)); zero singular values permitted."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or min(A.shape) < 1:
        raise ValueError("svd expects a nonempty 2-D matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("svd input has non-finite entries")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    return SvdFactors(U=U, singular_values=s, V=Vt.T)


def random_orthogonal(p, seed):
    """Haar-distributed orthogonal matrix: QR of an i.i.d. Gaussian matrix with
    the R-diagonal sign fix."""
    if p < 1:
        raise ValueError("p must be >= 1")
    rng = rng_from_seed(seed)
    G = rng.standard_normal((p, p))
    Q, R = np.linalg.qr(G)
    d = np.diag(R).copy()
    d[d == 0] = 1.0
    return Q * np.sign(d)


def dct_matrix(p):
    """Orthogonal DCT-II matrix Q[i, j] = c_i cos(pi (2j+1) i / (2p))."""
    if p < 1:
        raise ValueError("p must be >= 1")
    i = np.arange(p)[:, None]
    j = np.arange(p)[None, :]
    Q = np.cos(np.pi * (2 * j + 1) * i / (2 * p))
    c = np.full(p, np.sqrt(2.0 / p))
    c[0] = np.sqrt(1.0 / p)
    return c[:, None] * Q
