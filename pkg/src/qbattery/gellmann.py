"""Generalized Gell-Mann basis normalized to ``Tr(l_i l_j) = d delta_ij``.

Generator order is fixed: symmetric pairs (j < k, row-major), then the
antisymmetric pairs in the same order, then the ``d - 1`` diagonal
generators. For ``d = 2`` this gives the Pauli matrices X, Y, Z.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .cmatrix import DimensionError, NotHermitianError, as_matrix, is_hermitian


@dataclass(frozen=True)
class GellMannBasis:
    """Index description of the basis; dense matrices are built only on request.

    Decomposition and synthesis work from the index formulas directly, so
    they cost O(d^2) instead of O(d^4) and large dimensions stay cheap.
    """

    dim: int

    def __len__(self) -> int:
        return self.dim * self.dim - 1

    @cached_property
    def _pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return np.triu_indices(self.dim, k=1)

    @cached_property
    def _diag_weights(self) -> np.ndarray:
        """Row ``l-1`` holds the diagonal of generator ``l`` (scaled)."""
        d = self.dim
        w = np.zeros((d - 1, d))
        for l in range(1, d):
            w[l - 1, :l] = 1.0
            w[l - 1, l] = -l
            w[l - 1] *= np.sqrt(2.0 / (l * (l + 1)))
        return w * np.sqrt(d / 2.0)

    @cached_property
    def matrices(self) -> np.ndarray:
        """Dense stack of shape ``(d*d - 1, d, d)``."""
        eye = np.eye(len(self))
        mats = np.array([_synthesize_traceless(self, e) for e in eye])
        mats.setflags(write=False)
        return mats

    def gram(self) -> np.ndarray:
        return np.einsum("aij,bji->ab", self.matrices, self.matrices)


@dataclass(frozen=True)
class HamiltonianCoeffs:
    """``H = a0 I + sum_i a[i] lambda_i``."""

    a0: float
    a: np.ndarray

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(len(self.a) + 1)))


@lru_cache(maxsize=None)
def _cached_basis(d: int) -> GellMannBasis:
    return GellMannBasis(dim=d)


def _synthesize_traceless(basis: GellMannBasis, a: np.ndarray) -> np.ndarray:
    d = basis.dim
    j, k = basis._pairs
    m = len(j)
    scale = np.sqrt(d / 2.0)
    h = np.zeros((d, d), dtype=complex)
    h[j, k] = scale * (a[:m] - 1j * a[m:2 * m])
    h[k, j] = scale * (a[:m] + 1j * a[m:2 * m])
    h[np.arange(d), np.arange(d)] = a[2 * m:] @ basis._diag_weights
    return h


def build_basis(d: int) -> GellMannBasis:
    if d < 2:
        raise ValueError(f"Gell-Mann basis needs d >= 2, got {d}")
    return _cached_basis(int(d))


def decompose(h, basis: GellMannBasis) -> HamiltonianCoeffs:
    h = as_matrix(h)
    d = basis.dim
    if h.shape != (d, d):
        raise DimensionError(f"Hamiltonian shape {h.shape} does not match basis dimension {d}")
    if not is_hermitian(h):
        raise NotHermitianError("Hamiltonian is not Hermitian within 1e-10")
    a0 = np.trace(h).real / d
    j, k = basis._pairs
    scale = np.sqrt(d / 2.0)
    upper = h[j, k]
    a = np.concatenate([
        2 * scale * upper.real / d,
        -2 * scale * upper.imag / d,
        basis._diag_weights @ np.diagonal(h).real / d,
    ])
    return HamiltonianCoeffs(a0=float(a0), a=a)


def synthesize(c: HamiltonianCoeffs, basis: GellMannBasis) -> np.ndarray:
    a = np.asarray(c.a, dtype=float)
    if a.shape != (len(basis),):
        raise DimensionError(f"expected {len(basis)} coefficients, got {a.shape}")
    return c.a0 * np.eye(basis.dim, dtype=complex) + _synthesize_traceless(basis, a)


def sum_sq(c: HamiltonianCoeffs) -> float:
    """Squared norm of the traceless part, ``sum_{i>=1} a_i^2``."""
    return float(np.sum(np.asarray(c.a, dtype=float) ** 2))
