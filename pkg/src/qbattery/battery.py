"""Battery model: energies, single-realization extraction, passive state, ergotropy."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import gellmann
from .cmatrix import DimensionError, NotHermitianError, adjoint, as_matrix, hermitian_eig, is_hermitian, kron, partial_trace
from .ensembles import DensityMatrix
from .gellmann import HamiltonianCoeffs


class ProcessClass(enum.Enum):
    UNITARY = "unitary"
    CPTP = "cptp"
    GENERAL = "general"

    @classmethod
    def parse(cls, value) -> "ProcessClass":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


class InconsistentRealization(ValueError):
    pass


@dataclass(frozen=True)
class BatterySpec:
    rho: DensityMatrix
    hamiltonian: np.ndarray
    coeffs: HamiltonianCoeffs

    def __post_init__(self):
        h = as_matrix(self.hamiltonian)
        if not is_hermitian(h):
            raise NotHermitianError("battery Hamiltonian is not Hermitian within 1e-10")
        if h.shape[0] != self.rho.dim:
            raise DimensionError(f"state dimension {self.rho.dim} != Hamiltonian dimension {h.shape[0]}")

    @classmethod
    def from_matrix(cls, rho, hamiltonian) -> "BatterySpec":
        rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
        h = as_matrix(hamiltonian)
        coeffs = gellmann.decompose(h, gellmann.build_basis(h.shape[0]))
        return cls(rho, h, coeffs)

    @classmethod
    def from_coeffs(cls, rho, coeffs: HamiltonianCoeffs) -> "BatterySpec":
        rho = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
        h = gellmann.synthesize(coeffs, gellmann.build_basis(rho.dim))
        return cls(rho, h, coeffs)

    @property
    def dim(self) -> int:
        return self.rho.dim

    @property
    def purity(self) -> float:
        return self.rho.purity()

    @property
    def sum_sq(self) -> float:
        return gellmann.sum_sq(self.coeffs)


@dataclass(frozen=True)
class ProcessRealization:
    """One concrete extraction process.

    ``unitary`` acts on the battery alone (UNITARY) or on battery (x) auxiliary.
    ``aux_state`` is set for CPTP, ``joint_state`` for GENERAL.
    """

    kind: ProcessClass
    unitary: np.ndarray
    aux_state: Optional[DensityMatrix] = None
    joint_state: Optional[DensityMatrix] = None

    dA: int = 0

    def __post_init__(self):
        if self.kind is ProcessClass.UNITARY and self.dA != 0:
            raise InconsistentRealization("a battery-only unitary has no auxiliary (dA must be 0)")
        if self.kind is not ProcessClass.UNITARY and self.dA < 1:
            raise InconsistentRealization("dilated realizations need dA >= 1")


def energy(rho, h) -> float:
    r = rho.mat if isinstance(rho, DensityMatrix) else as_matrix(rho)
    h = as_matrix(h)
    if r.shape != h.shape:
        raise DimensionError(f"state shape {r.shape} != Hamiltonian shape {h.shape}")
    e = np.sum(r * h.T)
    if abs(e.imag) > 1e-10:
        raise NotHermitianError(f"energy has imaginary part {e.imag:.3g}")
    return float(e.real)


def final_state(b: BatterySpec, p: ProcessRealization) -> np.ndarray:
    dB = b.dim
    u = as_matrix(p.unitary)
    if p.kind is ProcessClass.UNITARY:
        if u.shape != (dB, dB) or p.aux_state is not None or p.joint_state is not None:
            raise InconsistentRealization("unitary realization needs a d_B x d_B unitary and no auxiliary")
        return u @ b.rho.mat @ adjoint(u)
    if p.kind is ProcessClass.CPTP:
        if p.aux_state is None or p.joint_state is not None:
            raise InconsistentRealization("CPTP realization needs aux_state only")
        dA = p.dA
        if p.aux_state.dim != dA:
            raise InconsistentRealization(f"auxiliary state dimension {p.aux_state.dim} != dA={dA}")
        joint = kron(b.rho.mat, p.aux_state.mat)
    else:
        if p.joint_state is None or p.aux_state is not None:
            raise InconsistentRealization("general realization needs joint_state only")
        dA = p.dA
        if p.joint_state.dim != dB * dA:
            raise InconsistentRealization(f"joint dimension {p.joint_state.dim} != d_B*d_A={dB * dA}")
        joint = p.joint_state.mat
        marginal = partial_trace(joint, (dB, dA), keep=[0])
        if np.linalg.norm(marginal - b.rho.mat) > 1e-9:
            raise InconsistentRealization("joint state does not reduce to the battery state")
    if u.shape != (dB * dA, dB * dA):
        raise InconsistentRealization(f"global unitary must be {dB * dA} x {dB * dA}, got {u.shape}")
    return partial_trace(u @ joint @ adjoint(u), (dB, dA), keep=[0])


def extracted_energy(b: BatterySpec, p: ProcessRealization) -> float:
    """Signed energy drop ``Tr(rho H) - Tr(rho' H)``; negative values mean charging."""
    return energy(b.rho, b.hamiltonian) - energy(final_state(b, p), b.hamiltonian)


def passive_state(b: BatterySpec) -> DensityMatrix:
    p = np.sort(b.rho.eigenvalues, kind="stable")[::-1]
    _, vecs = hermitian_eig(b.hamiltonian)
    sigma = (vecs * np.clip(p, 0.0, None)) @ adjoint(vecs)
    sigma = 0.5 * (sigma + adjoint(sigma))
    return DensityMatrix(sigma / np.trace(sigma).real)


def ergotropy(b: BatterySpec) -> float:
    return energy(b.rho, b.hamiltonian) - energy(passive_state(b), b.hamiltonian)


def diagonal_state_with_purity(d: int, purity: float) -> DensityMatrix:
    """``diag(x, y, ..., y)`` with ``Tr rho^2 = purity``, ``x >= y``."""
    if not 1.0 / d - 1e-12 <= purity <= 1.0 + 1e-12:
        raise ValueError(f"purity {purity} outside [1/{d}, 1]")
    x = (1.0 + np.sqrt(max(0.0, (d - 1) * (d * purity - 1)))) / d
    p = np.full(d, (1.0 - x) / (d - 1))
    p[0] = x
    return DensityMatrix(np.diag(p).astype(complex))


def canonical_battery(d: int, purity: float, sum_sq: float, a0: float = 0.0) -> BatterySpec:
    """Battery fixed only by the quantities the closed forms depend on.

    The state is diagonal with the requested purity and the Hamiltonian is
    ``a0 I + sqrt(sum_sq) * lambda_last`` (the last diagonal generator).
    """
    if sum_sq < 0:
        raise ValueError(f"sum_sq must be >= 0, got {sum_sq}")
    a = np.zeros(d * d - 1)
    a[-1] = np.sqrt(sum_sq)
    return BatterySpec.from_coeffs(diagonal_state_with_purity(d, purity), HamiltonianCoeffs(a0=a0, a=a))
