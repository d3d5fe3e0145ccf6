"""Closed-form averages and fluctuations of extractable energy.

All fluctuation functions return the variance of the extracted energy in
energy^2 units. The comparison helpers (conditions, orderings) work in exact
rational arithmetic so that boundary cases are decided without rounding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

from .battery import BatterySpec, ProcessClass, energy

EULER_GAMMA = 0.5772156649015329

# factorials above this argument go through log-Gamma
_EXACT_FACTORIAL_MAX = 170


@dataclass(frozen=True)
class FluctuationInputs:
    dB: int
    dA: int
    alpha1: float
    sum_sq: float

    def __post_init__(self):
        if self.dB < 2:
            raise ValueError(f"battery dimension must be >= 2, got {self.dB}")
        if self.dA < 0:
            raise ValueError(f"auxiliary dimension must be >= 0, got {self.dA}")
        if not (1.0 / self.dB - 1e-12 <= self.alpha1 <= 1.0 + 1e-12):
            raise ValueError(f"purity {self.alpha1} outside [1/dB, 1]")
        if self.sum_sq < 0 or not math.isfinite(self.sum_sq):
            raise ValueError(f"sum_sq must be finite and >= 0, got {self.sum_sq}")

    @classmethod
    def from_battery(cls, b: BatterySpec, dA: int = 0) -> "FluctuationInputs":
        return cls(dB=b.dim, dA=dA, alpha1=min(1.0, b.purity), sum_sq=b.sum_sq)


@dataclass(frozen=True)
class FiniteNAverage:
    """Auxiliary-dimension average over ``d_A = 2 .. n+1``.

    ``lower_bound``/``upper_bound`` come from exact partial sums; the
    ``approx_*`` fields use the ``ln N + gamma`` harmonic approximation and
    are informational only (they are not guaranteed bounds).
    """

    process: ProcessClass
    n: int
    value: float
    lower_bound: float
    upper_bound: float
    approx_lower: Optional[float] = None
    approx_upper: Optional[float] = None


class Ordering(enum.Enum):
    G_U_CPTP = "G>U>CPTP"
    G_CPTP_U = "G>CPTP>U"
    U_G_CPTP = "U>G>CPTP"
    DEGENERATE = "degenerate"


class OutOfRegime(ValueError):
    pass


# -- averages ------------------------------------------------------------------

def avg_extractable_energy(b: BatterySpec, process: ProcessClass | str | None = None) -> float:
    """Mean extracted energy; the same for every process class."""
    if process is not None:
        ProcessClass.parse(process)
    return energy(b.rho, b.hamiltonian) - float(np.trace(b.hamiltonian).real) / b.dim


# -- auxiliary purity ------------------------------------------------------------

def avg_purity_hs(dA: int, dC: int) -> float:
    if dA < 1 or dC < 1:
        raise ValueError(f"dimensions must be positive, got ({dA}, {dC})")
    return (dA + dC) / (dA * dC + 1)


def alpha_cptp(dA: int, alpha1: float) -> float:
    """Mean joint purity for a product with an auxiliary drawn with ``d_C = d_A``."""
    if dA < 1:
        raise ValueError(f"auxiliary dimension must be >= 1, got {dA}")
    return 2 * dA * alpha1 / (dA * dA + 1)


def _gamma_int(k: int) -> int:
    if k < 1:
        raise ValueError(f"Gamma is evaluated only at positive integers, got {k}")
    return math.factorial(k - 1)


def _log_gamma_int(k: int) -> float:
    if k < 1:
        raise ValueError(f"Gamma is evaluated only at positive integers, got {k}")
    return math.lgamma(k)


def _j2_term(c: int, i: int, p: int) -> Fraction:
    # c = dC - dA; only i - p in {0, 1, 2} keeps every argument positive
    num = (c + p + 3, i + 1, 3, 3)
    den = (c + i + 1, i - p + 1, i - p + 1, 3 - i + p, 3 - i + p, p + 1)
    if max(num + den) <= _EXACT_FACTORIAL_MAX:
        top = math.prod(_gamma_int(k) for k in num)
        bottom = math.prod(_gamma_int(k) for k in den)
        return Fraction(top, bottom)
    log_term = sum(_log_gamma_int(k) for k in num) - sum(_log_gamma_int(k) for k in den)
    return Fraction(round(math.exp(log_term)))


def trace_J2(dA: int, dC: int, method: str = "closed") -> int:
    """Trace of the r = 2 moment matrix of the induced measure.

    ``direct`` sums the Gamma-function double series term by term,
    ``closed`` evaluates ``(dA + dC) dA dC``.
    """
    if dA < 1 or dC < 1:
        raise ValueError(f"dimensions must be positive, got ({dA}, {dC})")
    if dC < dA:
        raise ValueError(f"requires dC >= dA, got dA={dA}, dC={dC}")
    if method == "closed":
        return (dA + dC) * dA * dC
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    c = dC - dA
    total = Fraction(0)
    for i in range(dA):
        for p in range(dA):
            if i - p in (0, 1, 2):
                total += _j2_term(c, i, p)
    if total.denominator != 1:
        raise ArithmeticError(f"non-integral trace {total}")
    return int(total)


def avg_purity_from_trace_J2(dA: int, dC: int) -> Fraction:
    """Mean purity as ``Gamma(dA dC) / Gamma(dA dC + 2) * Tr J(2)``, via the direct sum."""
    lo, hi = sorted((dA, dC))
    n = dA * dC
    return Fraction(trace_J2(lo, hi, method="direct"), n * (n + 1))


# -- fixed-dimension fluctuations --------------------------------------------------

def fluct_unitary(inp: FluctuationInputs) -> float:
    d = inp.dB
    return max(0.0, (d * inp.alpha1 - 1) / (d * d - 1)) * inp.sum_sq


def fluct_cptp_fixed_dA(inp: FluctuationInputs, beta1: float | None = None) -> float:
    if inp.dA < 2:
        raise ValueError(f"CPTP fluctuation needs dA >= 2, got {inp.dA}")
    alpha = alpha_cptp(inp.dA, inp.alpha1) if beta1 is None else inp.alpha1 * beta1
    D = inp.dB * inp.dA
    return (D * alpha - 1) / (D * D - 1) * inp.sum_sq


def fluct_general_fixed_dA(inp: FluctuationInputs) -> float:
    if inp.dA < 2:
        raise ValueError(f"general-map fluctuation needs dA >= 2, got {inp.dA}")
    return inp.sum_sq / (inp.dB * inp.dA + 1)


def fluct_fixed_dA(process: ProcessClass | str, inp: FluctuationInputs) -> float:
    process = ProcessClass.parse(process)
    if process is ProcessClass.UNITARY:
        return fluct_unitary(inp)
    if process is ProcessClass.CPTP:
        return fluct_cptp_fixed_dA(inp)
    return fluct_general_fixed_dA(inp)


# -- regime conditions (exact) --------------------------------------------------------

def _rational(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _default_beta1(dA: int) -> Fraction:
    return Fraction(2 * dA, dA * dA + 1)


def cond_general_exceeds_unitary(dB: int, dA: int, alpha1) -> bool:
    if dB < 2 or dA < 2:
        raise ValueError("condition defined for dB, dA >= 2")
    return _rational(alpha1) < Fraction(dA + dB, 1 + dA * dB)


def unitary_cptp_threshold(dB: int, dA: int, beta1=None) -> Fraction:
    beta1 = _default_beta1(dA) if beta1 is None else _rational(beta1)
    den = dA * dA * dB * dB - 1 - beta1 * dA * (dB * dB - 1)
    if den <= 0:
        raise OutOfRegime(f"nonpositive denominator {den} for dB={dB}, dA={dA}, beta1={beta1}")
    return Fraction(dB * (dA * dA - 1)) / den


def cond_unitary_exceeds_cptp(dB: int, dA: int, alpha1, beta1=None) -> bool:
    if dB < 2 or dA < 2:
        raise ValueError("condition defined for dB, dA >= 2")
    return _rational(alpha1) > unitary_cptp_threshold(dB, dA, beta1)


def unit_fluctuations(dB: int, dA: int, alpha1, beta1=None) -> dict[ProcessClass, Fraction]:
    """The three fixed-``d_A`` fluctuations per unit ``sum a_i^2``, as exact rationals."""
    a1 = _rational(alpha1)
    beta1 = _default_beta1(dA) if beta1 is None else _rational(beta1)
    D = dB * dA
    return {
        ProcessClass.UNITARY: (dB * a1 - 1) / Fraction(dB * dB - 1),
        ProcessClass.CPTP: (D * a1 * beta1 - 1) / Fraction(D * D - 1),
        ProcessClass.GENERAL: Fraction(1, D + 1),
    }


def classify_ordering(dB: int, dA: int, alpha1, beta1=None) -> Ordering:
    v = unit_fluctuations(dB, dA, alpha1, beta1)
    u, c, g = v[ProcessClass.UNITARY], v[ProcessClass.CPTP], v[ProcessClass.GENERAL]
    if g > u > c:
        return Ordering.G_U_CPTP
    if g > c > u:
        return Ordering.G_CPTP_U
    if u > g > c:
        return Ordering.U_G_CPTP
    return Ordering.DEGENERATE


# -- large-battery approximations ----------------------------------------------------------

def exact_gap_u_minus_cptp(dB: int, dA: int, alpha1: float) -> float:
    D = dB * dA
    return (dB * alpha1 - 1) / (dB * dB - 1) - (D * alpha_cptp(dA, alpha1) - 1) / (D * D - 1)


def exact_gap_g_minus_u(dB: int, dA: int, alpha1: float) -> float:
    return 1 / (dB * dA + 1) - (dB * alpha1 - 1) / (dB * dB - 1)


def large_dB_gap_u_minus_cptp(dB: int, dA: int, alpha1: float) -> float:
    """Leading large-``d_B`` form of (U - CPTP) per unit ``sum a_i^2``."""
    return (dA * alpha1 - alpha_cptp(dA, alpha1)) / (dB * dA)


def large_dB_gap_g_minus_u(dB: int, dA: int, alpha1: float) -> float:
    """Leading large-``d_B`` form of (G - U) per unit ``sum a_i^2``."""
    return ((dA + dB) / (1 + dA * dB) - alpha1) / dB


# -- averages over auxiliary dimension ---------------------------------------------------------

def _harmonic(n: int) -> float:
    return math.fsum(1.0 / k for k in range(1, n + 1))


def finite_n_avg(process: ProcessClass | str, n: int, dB: int, alpha1: float, sum_sq: float) -> FiniteNAverage:
    """Average of the fixed-``d_A`` fluctuation over ``d_A = 2 .. n+1``."""
    process = ProcessClass.parse(process)
    if n < 1 or dB < 2:
        raise ValueError(f"need n >= 1 and dB >= 2, got n={n}, dB={dB}")
    dA = np.arange(2, n + 2, dtype=float)
    if process is ProcessClass.GENERAL:
        value = sum_sq / n * math.fsum(1.0 / (dB * dA + 1))
        scale = sum_sq / (n * dB)
        lower = scale * (_harmonic(n + 2) - 1.5)
        upper = scale * (_harmonic(n + 1) - 1.0)
        return FiniteNAverage(
            process, n, value, lower, upper,
            approx_lower=scale * (math.log(n + 2) + EULER_GAMMA - 1.5),
            approx_upper=scale * (math.log(n + 1) + EULER_GAMMA - 1.0),
        )
    if process is ProcessClass.CPTP:
        D = dB * dA
        alpha = 2 * dA * alpha1 / (dA * dA + 1)
        value = sum_sq / n * math.fsum((D * alpha - 1) / (D * D - 1))
        # partial fractions: term = p/(dA^2 - eps) + r/(dA^2 + 1), eps = 1/dB^2
        eps = 1.0 / dB**2
        p = (2 * alpha1 / dB) * (1 - 1 / (1 + eps)) - eps
        r = (2 * alpha1 / dB) / (1 + eps)
        env_lo, env_hi = cptp_envelopes(n)
        lower = sum_sq / n * (min(p * env_lo, p * env_hi) + r * env_lo)
        upper = sum_sq / n * (max(p * env_lo, p * env_hi) + r * env_hi)
        return FiniteNAverage(process, n, value, lower, upper)
    raise ValueError("finite-n averages are defined for CPTP and general maps only")


def cptp_envelopes(n: int) -> tuple[float, float]:
    """Telescoping bounds shared by both partial sums in the CPTP average.

    Both ``sum 1/(d^2 - eps)`` and ``sum 1/(d^2 + 1)`` over ``d = 2..n+1``
    lie strictly between ``1/2 - 1/(n+2)`` and ``1 - 1/(n+1)``.
    """
    return 0.5 - 1.0 / (n + 2), 1.0 - 1.0 / (n + 1)


def cptp_partial_sums(n: int, dB: int) -> tuple[float, float]:
    dA = np.arange(2, n + 2, dtype=float)
    return math.fsum(1.0 / (dA * dA - 1.0 / dB**2)), math.fsum(1.0 / (dA * dA + 1))


# -- predicted exponents --------------------------------------------------------------------------

class ScalingPrediction(NamedTuple):
    slope: float
    log_correction: bool = False


def scaling_exponent_prediction(process: ProcessClass | str, axis: str) -> ScalingPrediction:
    process = ProcessClass.parse(process)
    if axis == "dB":
        return ScalingPrediction(-1.0)
    if axis == "dA":
        return ScalingPrediction({ProcessClass.UNITARY: 0.0, ProcessClass.CPTP: -2.0, ProcessClass.GENERAL: -1.0}[process])
    if axis == "n":
        if process is ProcessClass.UNITARY:
            return ScalingPrediction(0.0)
        return ScalingPrediction(-1.0, log_correction=process is ProcessClass.GENERAL)
    raise ValueError(f"unknown axis {axis!r}")
