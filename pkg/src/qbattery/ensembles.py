"""Random unitaries, random states and the random-Hamiltonian protocol.

Every sampler takes either a :class:`RandomStream` (a reproducible value:
the same stream always yields the same draw) or a live
``numpy.random.Generator`` (consumed sequentially).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .cmatrix import HERMITIAN_TOL, DimensionError, as_matrix, is_hermitian
from .gellmann import GellMannBasis, HamiltonianCoeffs

RANK_TOL = 1e-12


@dataclass(frozen=True)
class RandomStream:
    """Counter-based substream keyed by ``(seed, stream_id)``.

    Backed by Philox seeded through ``SeedSequence`` with the stream id as
    spawn key, so distinct ids give independent streams on every platform.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, stream_id: int) -> "RandomStream":
        return RandomStream(self.seed, stream_id)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RandomStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RandomStream or numpy Generator, got {type(rng).__name__}")


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True)
class DensityMatrix:
    mat: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.mat)
        if m.shape[0] != m.shape[1]:
            raise InvalidStateError(f"density matrix must be square, got {m.shape}")
        if not is_hermitian(m, HERMITIAN_TOL):
            raise InvalidStateError("density matrix is not Hermitian within 1e-10")
        if abs(np.trace(m) - 1.0) > 1e-10:
            raise InvalidStateError(f"trace {np.trace(m).real:.3g} != 1")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < -1e-10:
            raise InvalidStateError("density matrix has a negative eigenvalue")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.mat, self.mat)))

    def rank(self, tol: float = RANK_TOL) -> int:
        return int(np.sum(self.eigenvalues > tol))


# -- Gaussian building blocks ------------------------------------------------

def complex_gaussian(z: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Reshape ``2*rows*cols`` trailing standard normals into a Ginibre block.

    Entries have unit variance, ``E|g|^2 = 1``.
    """
    z = np.asarray(z, dtype=float)
    n = rows * cols
    if z.shape[-1] != 2 * n:
        raise DimensionError(f"need {2 * n} normals, got {z.shape[-1]}")
    g = (z[..., :n] + 1j * z[..., n:]) / np.sqrt(2.0)
    return g.reshape(z.shape[:-1] + (rows, cols))


def ginibre(rows: int, cols: int, rng) -> np.ndarray:
    gen = as_generator(rng)
    return complex_gaussian(gen.standard_normal(2 * rows * cols), rows, cols)


def orthonormalize(g: np.ndarray) -> np.ndarray:
    """Q factor of a (stack of) Ginibre matrices with the R-diagonal phases removed.

    For a square input the result is Haar distributed on U(d); for a tall
    ``D x r`` input it is a Haar isometry (the first ``r`` columns of a Haar
    unitary). Plain QR without the phase fix is not Haar.
    """
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return q * phases[..., None, :]


def haar_unitary(d: int, rng) -> np.ndarray:
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    return orthonormalize(ginibre(d, d, rng))


def density_from_ginibre(g: np.ndarray) -> np.ndarray:
    """``G G^dag / Tr(G G^dag)`` for a (stack of) Ginibre matrices."""
    w = g @ np.conj(np.swapaxes(g, -1, -2))
    tr = np.trace(w, axis1=-2, axis2=-1).real
    w = w / tr[..., None, None]
    return 0.5 * (w + np.conj(np.swapaxes(w, -1, -2)))


def hs_density(dA: int, dC: int, rng) -> DensityMatrix:
    """Random state from the measure induced by tracing out a ``dC``-level ancilla."""
    if dA < 1 or dC < 1:
        raise ValueError(f"dimensions must be positive, got ({dA}, {dC})")
    return DensityMatrix(density_from_ginibre(ginibre(dA, dC, rng)))


def random_pure_state(d: int, rng) -> DensityMatrix:
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    v = ginibre(d, 1, rng)[:, 0]
    v /= np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()))


def purification_vector(rho: DensityMatrix, dA: int) -> np.ndarray:
    """``sum_k sqrt(p_k) |v_k> (x) |k>`` using the first ``rank`` ancilla levels."""
    p, v = np.linalg.eigh(rho.mat)
    order = np.argsort(p, kind="stable")[::-1]
    p, v = p[order], v[:, order]
    r = int(np.sum(p > RANK_TOL))
    if dA < r:
        raise InvalidStateError(f"auxiliary dimension {dA} is below the state rank {r}")
    psi = np.zeros((rho.dim, dA), dtype=complex)
    psi[:, :r] = v[:, :r] * np.sqrt(p[:r])
    psi = psi.reshape(-1)
    return psi / np.linalg.norm(psi)


def purify(rho: DensityMatrix, dA: int) -> DensityMatrix:
    psi = purification_vector(rho, dA)
    return DensityMatrix(np.outer(psi, psi.conj()))


def random_hamiltonian_fig1(d: int, rng, basis: GellMannBasis) -> HamiltonianCoeffs:
    """First ``d`` coefficients uniform on [0, 1]; the rest and ``a0`` are zero."""
    if d < 2:
        raise ValueError(f"need d >= 2, got {d}")
    if basis.dim != d:
        raise DimensionError(f"basis dimension {basis.dim} != {d}")
    a = np.zeros(d * d - 1)
    a[:d] = as_generator(rng).uniform(0.0, 1.0, size=d)
    return HamiltonianCoeffs(a0=0.0, a=a)
