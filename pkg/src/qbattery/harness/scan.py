"""Parameter scans, log-log fits, the fixed-auxiliary regime report and the d_B = d_A sweep."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .. import analytic
from ..analytic import FluctuationInputs, Ordering
from ..battery import BatterySpec, ProcessClass, canonical_battery, diagonal_state_with_purity
from ..ensembles import RandomStream, hs_density, random_hamiltonian_fig1, random_pure_state
from ..gellmann import build_basis
from ..montecarlo import McConfig, estimate
from .io import PROCESSES

AXES = ("dA", "dB", "n")
DEFAULT_FIT_SKIP = 0.2
MC_MAX_D_DEFAULT = 24


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    r2: float
    x: str = "log axis"
    y: str = "log value"

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2, "x": self.x, "y": self.y}


@dataclass
class ScanPoint:
    axis: float
    analytic: dict[str, float] = field(default_factory=dict)
    mc: dict[str, tuple[float, float]] = field(default_factory=dict)  # process -> (variance, se)
    extra: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        out = []
        if self.analytic:
            out.append({"axis": self.axis, "values": dict(self.analytic), "se": {}, "mode": "analytic"})
        if self.mc:
            out.append({
                "axis": self.axis,
                "values": {p: v for p, (v, _) in self.mc.items()},
                "se": {p: s for p, (_, s) in self.mc.items()},
                "mode": "mc",
            })
        return out

    def as_dict(self) -> dict:
        return {
            "axis": self.axis,
            "analytic": self.analytic,
            "mc": {p: {"value": v, "se": s} for p, (v, s) in self.mc.items()},
            **({"extra": self.extra} if self.extra else {}),
        }


@dataclass
class ScanResult:
    axis_name: str
    points: list[ScanPoint]
    fits: dict[str, Fit] = field(default_factory=dict)
    extra_fits: dict[str, Fit] = field(default_factory=dict)
    fit_window: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if not self.points:
            raise ValueError("a scan needs at least one point")

    def rows(self) -> list[dict]:
        return [r for p in self.points for r in p.rows()]

    def axis_values(self) -> np.ndarray:
        return np.array([p.axis for p in self.points], dtype=float)

    def series(self, process: str, source: str = "analytic") -> np.ndarray:
        if source == "analytic":
            return np.array([p.analytic.get(process, np.nan) for p in self.points])
        return np.array([p.mc[process][0] if process in p.mc else np.nan for p in self.points])

    def as_dict(self, primary: Optional[str] = None) -> dict:
        primary = primary if primary in self.fits else next(iter(self.fits), None)
        out = {
            "axis": self.axis_name,
            "points": [p.as_dict() for p in self.points],
            "fit": self.fits[primary].as_dict() if primary else None,
            "fits": {k: f.as_dict() for k, f in self.fits.items()},
            "extra_fits": {k: f.as_dict() for k, f in self.extra_fits.items()},
        }
        if self.fit_window is not None:
            out["fit_window"] = list(self.fit_window)
        return out


def linear_fit(x, y, x_label: str = "x", y_label: str = "y") -> Fit:
    res = stats.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return Fit(float(res.slope), float(res.intercept), float(res.rvalue**2), x_label, y_label)


def loglog_fit(x, y) -> Fit:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive data")
    return linear_fit(np.log(x), np.log(y), "log axis", "log value")


def fit_window(grid: Sequence[float], skip_fraction: float = DEFAULT_FIT_SKIP) -> tuple[float, float]:
    """Default window drops the smallest ``skip_fraction`` of the axis range."""
    lo, hi = float(min(grid)), float(max(grid))
    return lo + skip_fraction * (hi - lo), hi


def point_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([int(seed), *[int(k) for k in keys]]).generate_state(1, dtype=np.uint64)[0])


def _mc_fluctuations(battery: BatterySpec, dA: int, processes, samples: int, seed: int, kernel: str) -> dict[str, tuple[float, float]]:
    out = {}
    for i, proc in enumerate(processes):
        p = ProcessClass.parse(proc)
        est = estimate(McConfig(battery, p, dA=dA, samples=samples, seed=point_seed(seed, i), kernel=kernel))
        out[p.value] = (float(est.variance), float(est.se_variance))
    return out


def _analytic_fixed(dB: int, dA: int, alpha1: float, sum_sq: float) -> dict[str, float]:
    inp = FluctuationInputs(dB=dB, dA=dA, alpha1=alpha1, sum_sq=sum_sq)
    return {
        "unitary": analytic.fluct_unitary(inp),
        "cptp": analytic.fluct_cptp_fixed_dA(inp),
        "general": analytic.fluct_general_fixed_dA(inp),
    }


def _scan_point(axis: str, value: int, *, dB: int, dA: int, alpha1: float, sum_sq: float,
                mode: str, samples: int, seed: int, kernel: str) -> ScanPoint:
    pt = ScanPoint(axis=float(value))
    want_analytic = mode in ("analytic", "both")
    want_mc = mode in ("mc", "both")
    if axis in ("dA", "dB"):
        b_dim, a_dim = (dB, value) if axis == "dA" else (value, dA)
        if want_analytic:
            pt.analytic = _analytic_fixed(b_dim, a_dim, alpha1, sum_sq)
        if want_mc:
            battery = canonical_battery(b_dim, alpha1, sum_sq)
            pt.mc = _mc_fluctuations(battery, a_dim, PROCESSES, samples, point_seed(seed, value), kernel)
        return pt
    # n axis: average over d_A = 2 .. n+1
    if want_analytic:
        for proc in ("cptp", "general"):
            res = analytic.finite_n_avg(proc, value, dB, alpha1, sum_sq)
            pt.analytic[proc] = res.value
            pt.extra[proc] = {"lower_bound": res.lower_bound, "upper_bound": res.upper_bound,
                              "approx_lower": res.approx_lower, "approx_upper": res.approx_upper}
    if want_mc:
        battery = canonical_battery(dB, alpha1, sum_sq)
        acc = {"cptp": [], "general": []}
        for a_dim in range(2, value + 2):
            mc = _mc_fluctuations(battery, a_dim, ("cptp", "general"), samples, point_seed(seed, value, a_dim), kernel)
            for proc in acc:
                acc[proc].append(mc[proc])
        for proc, vals in acc.items():
            v = np.array(vals)
            pt.mc[proc] = (float(v[:, 0].mean()), float(math.sqrt(np.sum(v[:, 1] ** 2)) / len(v)))
    return pt


def scan(axis: str, grid: Sequence[int], *, dB: int = 2, dA: int = 2, alpha1: float = 1.0, sum_sq: float = 1.0,
         mode: str = "analytic", samples: int = 20_000, seed: int = 0, threads: int = 1,
         window: Optional[tuple[float, float]] = None, kernel: str = "reduced") -> ScanResult:
    """Evaluate the fluctuations along one axis and fit ``log value`` vs ``log axis``.

    ``dA`` axis holds ``dB`` fixed, ``dB`` axis holds ``dA`` fixed, ``n``
    axis averages the fixed-``d_A`` values over ``d_A = 2 .. n+1``.
    ``sum_sq`` is held fixed along every axis.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    if mode not in ("analytic", "mc", "both"):
        raise ValueError(f"mode must be analytic, mc or both, got {mode!r}")
    grid = [int(g) for g in grid]
    if not grid or sorted(grid) != grid or len(set(grid)) != len(grid):
        raise ValueError("grid must be non-empty, strictly ascending")
    minimum = {"dA": 2, "dB": 2, "n": 1}[axis]
    if grid[0] < minimum:
        raise ValueError(f"{axis} grid must start at >= {minimum}")

    def job(v: int) -> ScanPoint:
        return _scan_point(axis, v, dB=dB, dA=dA, alpha1=alpha1, sum_sq=sum_sq,
                           mode=mode, samples=samples, seed=seed, kernel=kernel)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(job, grid))
    else:
        points = [job(v) for v in grid]
    result = ScanResult(axis, points)
    _attach_fits(result, window if window is not None else fit_window(grid))
    return result


def _attach_fits(result: ScanResult, window: tuple[float, float]) -> None:
    x = result.axis_values()
    sel = (x >= window[0]) & (x <= window[1])
    result.fit_window = window
    if sel.sum() < 3:
        return
    source = "analytic" if result.points[0].analytic else "mc"
    for proc in PROCESSES:
        y = result.series(proc, source)
        if np.all(np.isfinite(y[sel])) and np.all(y[sel] > 0):
            result.fits[proc] = loglog_fit(x[sel], y[sel])
    if result.axis_name == "n" and "general" in result.fits:
        y = result.series("general", source)[sel] * x[sel]
        result.extra_fits["general_value_n_vs_ln_n"] = linear_fit(np.log(x[sel]), y, "ln n", "value * n")
        if np.all(x[sel] > 1):
            result.extra_fits["general_log_value_n_vs_log_ln_n"] = linear_fit(
                np.log(np.log(x[sel])), np.log(y), "log ln n", "log(value * n)")


# -- regime report ----------------------------------------------------------------

@dataclass(frozen=True)
class ClassifyReport:
    dB: int
    dA: int
    alpha1: float
    unit_values: dict[str, float]
    ordering: Ordering
    cond_general_exceeds_unitary: bool
    cond_unitary_exceeds_cptp: bool

    def lines(self) -> list[str]:
        v = self.unit_values
        return [
            f"dB={self.dB} dA={self.dA} alpha1={self.alpha1}",
            f"per unit sum a_i^2: unitary={v['unitary']:.10g} cptp={v['cptp']:.10g} general={v['general']:.10g}",
            f"ordering: {self.ordering.value}",
            f"general > unitary condition: {self.cond_general_exceeds_unitary}",
            f"unitary > cptp condition: {self.cond_unitary_exceeds_cptp}",
        ]

    def as_dict(self) -> dict:
        return {
            "dB": self.dB, "dA": self.dA, "alpha1": self.alpha1,
            "unit_values": self.unit_values, "ordering": self.ordering.value,
            "cond_general_exceeds_unitary": self.cond_general_exceeds_unitary,
            "cond_unitary_exceeds_cptp": self.cond_unitary_exceeds_cptp,
        }


def classify(dB: int, dA: int, alpha1, beta1=None) -> ClassifyReport:
    vals = analytic.unit_fluctuations(dB, dA, alpha1, beta1)
    return ClassifyReport(
        dB, dA, float(alpha1),
        {p.value: float(v) for p, v in vals.items()},
        analytic.classify_ordering(dB, dA, alpha1, beta1),
        analytic.cond_general_exceeds_unitary(dB, dA, alpha1),
        analytic.cond_unitary_exceeds_cptp(dB, dA, alpha1, beta1),
    )


def ordering_certificates(max_dim: int = 6, alpha_steps: int = 40) -> dict[Ordering, ClassifyReport]:
    """First concrete ``(dB, dA, alpha1)`` found for each strict ordering."""
    found: dict[Ordering, ClassifyReport] = {}
    for dB in range(2, max_dim + 1):
        for dA in range(2, max_dim + 1):
            for k in range(alpha_steps + 1):
                alpha1 = 1.0 / dB + (1.0 - 1.0 / dB) * k / alpha_steps
                rep = classify(dB, dA, alpha1)
                if rep.ordering is not Ordering.DEGENERATE:
                    found.setdefault(rep.ordering, rep)
            if len(found) == 3:
                return found
    return found


# -- d_B = d_A sweep with random Hamiltonians -----------------------------------------------------

def run_fig1(d_min: int = 2, d_max: int = 101, mode: str = "analytic", samples: int = 20_000, seed: int = 0,
             alpha1: Optional[float] = None, state: str = "mixed", mc_max_d: int = MC_MAX_D_DEFAULT,
             threads: int = 1, kernel: str = "reduced") -> ScanResult:
    """Fluctuations versus ``d = d_B = d_A`` for batteries with random Hamiltonians.

    Per ``d`` the first ``d`` Gell-Mann coefficients are uniform on [0, 1]
    and the rest vanish. The battery state is a random Hilbert-Schmidt
    mixed state (``state="mixed"``, default), a random pure state
    (``state="pure"``) or the diagonal state of purity ``alpha1`` when
    given. Monte Carlo runs only for ``d <= mc_max_d``.

    Pure batteries keep the unitary curve near ``sum a_i^2 / (d + 1)``,
    which tends to 1/3 because ``E[sum a_i^2] = d/3``; mixed batteries
    have purity near ``2/d`` and every curve decays.
    """
    if not 2 <= d_min <= d_max:
        raise ValueError(f"need 2 <= d_min <= d_max, got {d_min}, {d_max}")
    if state not in ("pure", "mixed"):
        raise ValueError(f"state must be pure or mixed, got {state!r}")

    def job(d: int) -> ScanPoint:
        gen = RandomStream(point_seed(seed, d), 0).generator()
        coeffs = random_hamiltonian_fig1(d, gen, build_basis(d))
        if alpha1 is not None:
            rho = diagonal_state_with_purity(d, alpha1)
        elif state == "pure":
            rho = random_pure_state(d, gen)
        else:
            rho = hs_density(d, d, gen)
        battery = BatterySpec.from_coeffs(rho, coeffs)
        a1 = min(1.0, max(1.0 / d, battery.purity))
        pt = ScanPoint(axis=float(d), extra={"alpha1": a1, "sum_sq": battery.sum_sq})
        if mode in ("analytic", "both"):
            pt.analytic = _analytic_fixed(d, d, a1, battery.sum_sq)
        if mode in ("mc", "both") and d <= mc_max_d:
            pt.mc = _mc_fluctuations(battery, d, PROCESSES, samples, point_seed(seed, d, 1), kernel)
        return pt

    ds = list(range(d_min, d_max + 1))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(job, ds))
    else:
        points = [job(d) for d in ds]
    result = ScanResult("d", points)
    _attach_fits(result, fit_window(ds))
    return result
