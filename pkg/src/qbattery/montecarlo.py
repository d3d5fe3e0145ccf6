"""Monte-Carlo estimation of the mean and variance of extracted energy.

Draws are generated in chunks. Chunk ``k`` always uses substream
``RandomStream(seed, k)`` and each draw takes one contiguous block of
standard normals, so a run is reproducible bit for bit regardless of how
many worker threads process the chunks.

Two sampling kernels produce the same distribution:

``full``
    builds the global Haar unitary, the joint state and the partial trace
    literally, exactly as one realization is defined in :mod:`battery`.
``reduced``
    uses right-invariance of the Haar measure: only the columns of the
    global unitary that hit the support of the joint state matter, and in
    the Hamiltonian eigenbasis only their squared moduli do. It draws a Haar
    isometry of rank ``rank(rho_BA)`` instead of a full unitary, which makes
    large dilations affordable.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .battery import BatterySpec, ProcessClass, energy
from .cmatrix import partial_trace
from .ensembles import (
    RANK_TOL,
    InvalidStateError,
    RandomStream,
    as_generator,
    complex_gaussian,
    density_from_ginibre,
    orthonormalize,
    purification_vector,
)

Number = Union[float, np.ndarray]

DEFAULT_CHUNK = 4096
# normals per kernel call; bounds peak memory for large dilations
BATCH_NORMALS = 1 << 21


@dataclass(frozen=True)
class MomentEstimate:
    """Streaming central moments (count, mean and sums of powered deviations).

    Fields may be scalars or same-shaped arrays (componentwise moments).
    """

    count: int = 0
    mean: Number = 0.0
    m2: Number = 0.0
    m3: Number = 0.0
    m4: Number = 0.0

    @classmethod
    def from_samples(cls, x, axis: int = 0) -> "MomentEstimate":
        x = np.asarray(x)
        n = x.shape[axis]
        if n == 0:
            return cls()
        mean = x.mean(axis=axis)
        dev = x - np.expand_dims(mean, axis)
        if np.iscomplexobj(dev):
            raise TypeError("moments are defined for real samples; split real and imaginary parts")
        d2 = dev * dev
        return cls(
            count=n,
            mean=_unwrap(mean),
            m2=_unwrap(d2.sum(axis=axis)),
            m3=_unwrap((d2 * dev).sum(axis=axis)),
            m4=_unwrap((d2 * d2).sum(axis=axis)),
        )

    def push(self, x: float) -> "MomentEstimate":
        return merge(self, MomentEstimate(1, x, 0.0, 0.0, 0.0))

    @property
    def variance(self) -> Number:
        """Population variance ``m2 / count``."""
        if self.count == 0:
            return math.nan
        return np.maximum(self.m2 / self.count, 0.0) if isinstance(self.m2, np.ndarray) else max(self.m2 / self.count, 0.0)

    @property
    def se_mean(self) -> Number:
        return np.sqrt(self.variance / self.count) if self.count else math.nan

    @property
    def se_variance(self) -> Number:
        """Large-sample standard error of the variance, ``sqrt((mu4 - mu2^2) / n)``."""
        if self.count == 0:
            return math.nan
        mu2 = self.m2 / self.count
        mu4 = self.m4 / self.count
        return np.sqrt(np.maximum(mu4 - mu2 * mu2, 0.0) / self.count)


def _unwrap(v):
    return v.item() if isinstance(v, np.ndarray) and v.ndim == 0 else v


def merge(a: MomentEstimate, b: MomentEstimate) -> MomentEstimate:
    """Combine two disjoint-sample estimates (pairwise update formulas)."""
    if a.count == 0:
        return b
    if b.count == 0:
        return a
    na, nb = a.count, b.count
    n = na + nb
    delta = b.mean - a.mean
    d2 = delta * delta
    mean = a.mean + delta * nb / n
    m2 = a.m2 + b.m2 + d2 * na * nb / n
    m3 = a.m3 + b.m3 + d2 * delta * na * nb * (na - nb) / n**2 + 3 * delta * (na * b.m2 - nb * a.m2) / n
    m4 = (
        a.m4 + b.m4
        + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / n**3
        + 6 * d2 * (na * na * b.m2 + nb * nb * a.m2) / n**2
        + 4 * delta * (na * b.m3 - nb * a.m3) / n
    )
    return MomentEstimate(n, mean, m2, m3, m4)


def merge_all(estimates) -> MomentEstimate:
    out = MomentEstimate()
    for e in estimates:
        out = merge(out, e)
    return out


@dataclass(frozen=True)
class McConfig:
    battery: BatterySpec
    process: ProcessClass
    dA: int = 2
    samples: int = 100_000
    seed: int = 0
    chunk: int = DEFAULT_CHUNK
    kernel: str = "full"
    # test hook: replace every Haar unitary by the identity
    identity_unitaries: bool = False
    _plan: "_Plan" = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "process", ProcessClass.parse(self.process))
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if self.chunk < 1:
            raise ValueError(f"chunk must be >= 1, got {self.chunk}")
        if self.kernel not in ("full", "reduced"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.process is not ProcessClass.UNITARY and self.dA < 1:
            raise ValueError(f"dilated processes need dA >= 1, got {self.dA}")
        object.__setattr__(self, "_plan", _Plan.build(self))


@dataclass(frozen=True)
class _Plan:
    """Per-config constants: block layout and precomputed spectra."""

    D: int
    rank: int
    n_aux: int  # normals for the auxiliary Ginibre block
    n_unitary: int  # normals for the unitary / isometry block
    e0: float  # initial energy
    rho_eigs: np.ndarray  # nonzero eigenvalues of rho_B, descending
    h_eigs: np.ndarray  # eigenvalues of H_B
    joint: np.ndarray | None  # pure joint state (general)

    @classmethod
    def build(cls, cfg: McConfig) -> "_Plan":
        b = cfg.battery
        dB = b.dim
        proc = cfg.process
        p = np.sort(b.rho.eigenvalues)[::-1]
        p = p[p > RANK_TOL]
        rB = len(p)
        h_eigs = np.linalg.eigvalsh(b.hamiltonian)
        e0 = energy(b.rho, b.hamiltonian)
        joint = None
        if proc is ProcessClass.UNITARY:
            D, rank, n_aux = dB, rB, 0
        elif proc is ProcessClass.CPTP:
            D, rank, n_aux = dB * cfg.dA, rB * cfg.dA, 2 * cfg.dA * cfg.dA
        else:
            if cfg.dA < rB:
                raise InvalidStateError(
                    f"general maps need dA >= rank(rho_B) = {rB}, got dA = {cfg.dA}"
                )
            D, rank, n_aux = dB * cfg.dA, 1, 0
            joint = purification_vector(b.rho, cfg.dA)
        cols = D if cfg.kernel == "full" else rank
        return cls(D, rank, n_aux, 2 * D * cols, e0, p, h_eigs, joint)

    @property
    def block(self) -> int:
        return self.n_aux + self.n_unitary


def _energies(rho: np.ndarray, h: np.ndarray) -> np.ndarray:
    return np.einsum("nij,ji->n", rho, h).real


def _full_kernel(cfg: McConfig, z: np.ndarray) -> np.ndarray:
    plan = cfg._plan
    b = cfg.battery
    n = z.shape[0]
    dB, D = b.dim, plan.D
    if cfg.identity_unitaries:
        u = np.broadcast_to(np.eye(D, dtype=complex), (n, D, D))
    else:
        u = orthonormalize(complex_gaussian(z[:, plan.n_aux:], D, D))
    ud = np.conj(np.swapaxes(u, -1, -2))
    if cfg.process is ProcessClass.UNITARY:
        final = u @ b.rho.mat @ ud
    else:
        dA = cfg.dA
        if cfg.process is ProcessClass.CPTP:
            rho_a = density_from_ginibre(complex_gaussian(z[:, :plan.n_aux], dA, dA))
            joint = np.einsum("ij,nkl->nikjl", b.rho.mat, rho_a).reshape(n, D, D)
        else:
            joint = np.outer(plan.joint, plan.joint.conj())
        final = partial_trace(u @ joint @ ud, (dB, dA), keep=[0])
    return plan.e0 - _energies(final, b.hamiltonian)


def _reduced_kernel(cfg: McConfig, z: np.ndarray) -> np.ndarray:
    plan = cfg._plan
    n = z.shape[0]
    if cfg.process is ProcessClass.UNITARY:
        weights = np.broadcast_to(plan.rho_eigs, (n, plan.rank))
        levels = plan.h_eigs
    elif cfg.process is ProcessClass.CPTP:
        dA = cfg.dA
        rho_a = density_from_ginibre(complex_gaussian(z[:, :plan.n_aux], dA, dA))
        q = np.linalg.eigvalsh(rho_a)
        weights = (plan.rho_eigs[None, :, None] * q[:, None, :]).reshape(n, plan.rank)
        levels = np.repeat(plan.h_eigs, dA)
    else:
        weights = np.ones((n, 1))
        levels = np.repeat(plan.h_eigs, cfg.dA)
    if cfg.identity_unitaries:
        raise ValueError("the identity hook is only available with the full kernel")
    v = orthonormalize(complex_gaussian(z[:, plan.n_aux:], plan.D, plan.rank))
    # E' = sum_k w_k <v_k| diag(levels) |v_k>
    e_final = np.einsum("njk,j,nk->n", (v * v.conj()).real, levels, weights)
    return plan.e0 - e_final


def sample_batch(cfg: McConfig, rng, n: int) -> np.ndarray:
    """``n`` consecutive draws of the extracted energy from one generator."""
    gen = as_generator(rng)
    block = cfg._plan.block
    kernel = _full_kernel if cfg.kernel == "full" else _reduced_kernel
    step = max(1, BATCH_NORMALS // block)
    if n <= step:
        return kernel(cfg, gen.standard_normal((n, block)))
    # consecutive draws from one generator continue the same normal sequence,
    # so splitting the batch does not change any sample
    return np.concatenate([kernel(cfg, gen.standard_normal((min(step, n - i), block))) for i in range(0, n, step)])


def sample_one(cfg: McConfig, rng) -> float:
    return float(sample_batch(cfg, rng, 1)[0])


def _chunk_sizes(cfg: McConfig) -> list[int]:
    full, rest = divmod(cfg.samples, cfg.chunk)
    return [cfg.chunk] * full + ([rest] if rest else [])


def chunk_samples(cfg: McConfig, k: int) -> np.ndarray:
    sizes = _chunk_sizes(cfg)
    return sample_batch(cfg, RandomStream(cfg.seed, k), sizes[k])


def draw_at(cfg: McConfig, index: int) -> float:
    """Replay the ``index``-th draw of :func:`estimate` for this config."""
    if not 0 <= index < cfg.samples:
        raise IndexError(f"draw index {index} outside [0, {cfg.samples})")
    k, j = divmod(index, cfg.chunk)
    return float(sample_batch(cfg, RandomStream(cfg.seed, k), j + 1)[j])


def estimate(cfg: McConfig, threads: int = 1) -> MomentEstimate:
    """Moments of the extracted energy over ``cfg.samples`` draws.

    Chunk estimates are merged in chunk order, so the result does not depend
    on ``threads``.
    """
    n_chunks = len(_chunk_sizes(cfg))

    def work(k: int) -> MomentEstimate:
        return MomentEstimate.from_samples(chunk_samples(cfg, k))

    if threads <= 1 or n_chunks == 1:
        parts = [work(k) for k in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(n_chunks)))
    return merge_all(parts)
