"""Dense complex-matrix kernel.

Matrices are plain ``numpy`` complex arrays. Subsystem ordering follows the
Kronecker convention: the first factor is the slowest index, so a joint
battery-auxiliary operator lives on ``(d_B, d_A)``.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10


class DimensionError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def _check_dims(m: np.ndarray, dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise DimensionError(f"invalid subsystem dims {dims}")
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"partial trace needs a square matrix, got {m.shape}")
    if int(np.prod(dims)) != m.shape[0]:
        raise DimensionError(f"dims {dims} do not multiply to {m.shape[0]}")
    return dims


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Kept subsystems retain their original relative order. Works on a single
    matrix or a stack of matrices (leading batch axes).
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim < 2:
        raise DimensionError("partial trace needs at least a 2-d array")
    dims = _check_dims(m[(0,) * (m.ndim - 2)] if m.ndim > 2 else m, dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise DimensionError("keep set must not be empty")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise DimensionError(f"keep indices {keep} out of range for {len(dims)} subsystems")

    batch = m.shape[:-2]
    n = len(dims)
    t = m.reshape(batch + dims + dims)
    nb = len(batch)
    # einsum labels: batch, row subsystems, column subsystems
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    b_lab = letters[:nb]
    row = list(letters[nb:nb + n])
    col = list(letters[nb + n:nb + 2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = b_lab + "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    reduced = np.einsum(b_lab + "".join(row) + "".join(col) + "->" + out, t)
    dk = int(np.prod([dims[i] for i in keep]))
    return reduced.reshape(batch + (dk, dk))


def swap_operator(d1: int, d2: int) -> np.ndarray:
    """Permutation ``|i j> -> |j i>`` from ``C^d1 (x) C^d2`` to ``C^d2 (x) C^d1``."""
    s = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for i in range(d1):
        for j in range(d2):
            s[j * d1 + i, i * d2 + j] = 1.0
    return s


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    m = as_matrix(m)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def hermitian_eig(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvector matrix of a Hermitian matrix."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"eigendecomposition needs a square matrix, got {m.shape}")
    if not is_hermitian(m):
        raise NotHermitianError("matrix is not Hermitian within 1e-10")
    return np.linalg.eigh(0.5 * (m + m.conj().T))


def frobenius_distance(a, b) -> float:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))
