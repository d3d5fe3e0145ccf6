"""Self-check suite: exact operator identities and Monte-Carlo moment identities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import analytic
from ..cmatrix import kron, partial_trace, swap_operator
from ..ensembles import RandomStream, complex_gaussian, density_from_ginibre, ginibre, hs_density, orthonormalize
from ..montecarlo import MomentEstimate, merge

N_SIGMA_HAAR = 5.0
N_SIGMA_PURITY = 5.0
# absolute slack on componentwise moment checks for components with zero spread
COMPONENT_SLACK = 1e-12
ID_TOL = 1e-10
MC_CHUNK = 8192


@dataclass
class CheckResult:
    name: str
    passed: bool
    deviation: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: deviation={self.deviation:.3e} tolerance={self.tolerance:.3e} {self.detail}".rstrip()


@dataclass
class VerifyReport:
    seed: int
    samples: int
    checks: list[CheckResult] = field(default_factory=list)
    tables: dict[str, list] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = [c.line() for c in self.checks]
        for name, rows in self.tables.items():
            out.append(f"{name}: " + ", ".join(str(r) for r in rows))
        return out


def _gaussian_integers(rng: np.random.Generator, d: int) -> np.ndarray:
    return (rng.integers(-5, 6, (d, d)) + 1j * rng.integers(-5, 6, (d, d))).astype(complex)


def _split(x: np.ndarray) -> np.ndarray:
    return np.concatenate([x.real.reshape(len(x), -1), x.imag.reshape(len(x), -1)], axis=1)


def _componentwise(name: str, est: MomentEstimate, target: np.ndarray, n_sigma: float) -> CheckResult:
    target = np.concatenate([target.real.ravel(), target.imag.ravel()])
    dev = np.abs(est.mean - target)
    tol = n_sigma * est.se_mean + COMPONENT_SLACK
    worst = int(np.argmax(dev / tol))
    return CheckResult(
        name,
        bool(np.all(dev <= tol)),
        float(dev[worst]),
        float(tol[worst]),
        f"({len(target)} components, worst z={dev[worst] / max(est.se_mean[worst], 1e-300):.2f})",
    )


def haar_moment_first(d: int, samples: int, seed: int) -> CheckResult:
    o = ginibre(d, d, RandomStream(seed, 1000 + d))
    est = MomentEstimate()
    for k, start in enumerate(range(0, samples, MC_CHUNK)):
        n = min(MC_CHUNK, samples - start)
        u = orthonormalize(complex_gaussian(RandomStream(seed, 2000 + 97 * d + k).generator().standard_normal((n, 2 * d * d)), d, d))
        x = u @ o @ np.conj(np.swapaxes(u, -1, -2))
        est = merge(est, MomentEstimate.from_samples(_split(x)))
    target = np.trace(o) * np.eye(d) / d
    return _componentwise(f"haar first moment d={d}", est, target, N_SIGMA_HAAR)


def second_moment_closed_form(o: np.ndarray, d: int) -> np.ndarray:
    s = swap_operator(d, d)
    tr_o = np.trace(o)
    tr_so = np.trace(s @ o)
    return ((tr_o - tr_so / d) * np.eye(d * d) + (tr_so - tr_o / d) * s) / (d * d - 1)


def haar_moment_second(d: int, samples: int, seed: int) -> CheckResult:
    o = ginibre(d * d, d * d, RandomStream(seed, 3000 + d))
    est = MomentEstimate()
    for k, start in enumerate(range(0, samples, MC_CHUNK)):
        n = min(MC_CHUNK, samples - start)
        u = orthonormalize(complex_gaussian(RandomStream(seed, 4000 + 97 * d + k).generator().standard_normal((n, 2 * d * d)), d, d))
        uu = np.einsum("nij,nkl->nikjl", u, u).reshape(n, d * d, d * d)
        x = uu @ o @ np.conj(np.swapaxes(uu, -1, -2))
        est = merge(est, MomentEstimate.from_samples(_split(x)))
    return _componentwise(f"haar second moment d={d}", est, second_moment_closed_form(o, d), N_SIGMA_HAAR)


def swap_trace_exact(d: int, seed: int) -> CheckResult:
    rng = RandomStream(seed, 5000 + d).generator()
    p, q = _gaussian_integers(rng, d), _gaussian_integers(rng, d)
    lhs = np.trace(kron(p, q) @ swap_operator(d, d))
    rhs = np.trace(p @ q)
    dev = float(abs(lhs - rhs))
    return CheckResult(f"Tr[(P x Q) S] = Tr[PQ] d={d}", dev == 0.0, dev, 0.0, "(Gaussian-integer P, Q)")


def swap_trace_float(d: int, seed: int) -> CheckResult:
    stream = RandomStream(seed, 5500 + d).generator()
    p, q = ginibre(d, d, stream), ginibre(d, d, stream)
    dev = float(abs(np.trace(kron(p, q) @ swap_operator(d, d)) - np.trace(p @ q)))
    return CheckResult(f"Tr[(P x Q) S] = Tr[PQ] d={d} (float)", dev <= 1e-12, dev, 1e-12)


def swap_partial_trace(d1: int, d2: int) -> CheckResult:
    s1 = swap_operator(d1 * d2, d1 * d2)
    lhs = partial_trace(s1, (d1, d2, d1, d2), keep=[0, 2])
    dev = float(np.max(np.abs(lhs - d2 * swap_operator(d1, d1))))
    return CheckResult(f"Tr_CD S1 = d2 S (d1={d1}, d2={d2})", dev == 0.0, dev, 0.0)


def tensor_square_identity(dB: int, dA: int, seed: int) -> CheckResult:
    """``Tr_A(X) (x) Tr_A(X) = Tr_{A1 A2}(X (x) X)`` for ``X = U rho U^dag``."""
    D = dB * dA
    u = orthonormalize(ginibre(D, D, RandomStream(seed, 6000 + D)))
    rho = hs_density(D, D, RandomStream(seed, 6500 + D)).mat
    x = u @ rho @ u.conj().T
    red = partial_trace(x, (dB, dA), keep=[0])
    lhs = kron(red, red)
    rhs = partial_trace(kron(x, x), (dB, dA, dB, dA), keep=[0, 2])
    dev = float(np.linalg.norm(lhs - rhs))
    return CheckResult(f"Tr_A(X) x Tr_A(X) = Tr_A(X x X) dB={dB} dA={dA}", dev < ID_TOL, dev, ID_TOL)


def trace_j2_check(dA: int, dC: int) -> CheckResult:
    direct = analytic.trace_J2(dA, dC, "direct")
    closed = analytic.trace_J2(dA, dC, "closed")
    dev = float(abs(direct - closed))
    return CheckResult(f"Tr J(2) direct vs closed dA={dA} dC={dC}", direct == closed, dev, 0.0, f"({direct})")


def hs_purity_mc(dA: int, dC: int, samples: int, seed: int) -> CheckResult:
    est = MomentEstimate()
    for k, start in enumerate(range(0, samples, MC_CHUNK)):
        n = min(MC_CHUNK, samples - start)
        z = RandomStream(seed, 7000 + 131 * dA + dC + 100_000 * k).generator().standard_normal((n, 2 * dA * dC))
        rho = density_from_ginibre(complex_gaussian(z, dA, dC))
        purity = np.einsum("nij,nji->n", rho, rho).real
        est = merge(est, MomentEstimate.from_samples(purity))
    target = analytic.avg_purity_hs(dA, dC)
    dev = abs(est.mean - target)
    tol = N_SIGMA_PURITY * est.se_mean
    return CheckResult(f"mean HS purity dA={dA} dC={dC}", dev <= tol, dev, tol, f"(target {target:.6f}, observed {est.mean:.6f})")


def verify_suite(seed: int = 1, samples: int = 100_000) -> VerifyReport:
    report = VerifyReport(seed, samples)
    add = report.checks.append
    for d in (2, 3):
        add(haar_moment_first(d, samples, seed))
        add(haar_moment_second(d, samples, seed))
    for d in (2, 3, 4):
        add(swap_trace_exact(d, seed))
        add(swap_trace_float(d, seed))
    for d1, d2 in ((2, 2), (2, 3), (3, 2), (3, 3)):
        add(swap_partial_trace(d1, d2))
    for dB, dA in ((2, 2), (2, 3), (3, 2), (3, 3)):
        add(tensor_square_identity(dB, dA, seed))
    table = []
    for dA in range(1, 9):
        for dC in range(dA, 9):
            check = trace_j2_check(dA, dC)
            add(check)
            if dA == dC:
                table.append(analytic.trace_J2(dA, dC))
    report.tables["Tr J(2), dA=dC=1..8"] = table
    for dA, dC in ((2, 2), (3, 3), (2, 4)):
        exact = analytic.avg_purity_from_trace_J2(dA, dC)
        closed = analytic.avg_purity_hs(dA, dC)
        add(CheckResult(f"mean purity Gamma series vs closed form dA={dA} dC={dC}", float(exact) == closed, abs(float(exact) - closed), 0.0, f"({exact})"))
        add(hs_purity_mc(dA, dC, samples, seed))
    return report
