"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 invalid arguments.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from .. import analytic
from ..analytic import FluctuationInputs, Ordering
from ..battery import ProcessClass, canonical_battery
from ..montecarlo import McConfig, estimate
from .io import RunManifest, Timer, dump_json, fmt, rows_to_csv
from .scan import classify, ordering_certificates, run_fig1, scan
from .verify import verify_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _grid(text: str) -> list[int]:
    """``50,100,200`` or ``start:stop:step`` (inclusive stop) or ``2^4..2^13`` powers."""
    text = text.strip()
    try:
        if ".." in text and "^" in text:
            lo, hi = text.split("..")
            base, e0 = lo.split("^")
            base2, e1 = hi.split("^")
            if base != base2:
                raise ValueError
            return [int(base) ** e for e in range(int(e0), int(e1) + 1)]
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            return list(range(start, stop + 1, step))
        return [int(p) for p in text.split(",") if p]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse grid {text!r}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--dB", type=int, default=2)
    p.add_argument("--dA", type=int, default=2)
    p.add_argument("--alpha1", type=str, default="1", help="battery purity Tr(rho_B^2); accepts fractions like 11/20")
    p.add_argument("--sum-sq", type=float, default=1.0, help="sum of squared traceless Hamiltonian coefficients")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--mode", choices=("analytic", "mc", "both"), default="analytic")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--format", choices=("text", "csv", "json"), default=None)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="qbattery", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("verify", parents=[common], help="run the identity and moment self-checks")
    sub.add_parser("average", parents=[common], help="mean extracted energy for all process classes")
    sub.add_parser("fluct", parents=[common], help="fixed-d_A fluctuations for all process classes")

    f = sub.add_parser("fig1", parents=[common], help="fluctuations versus d = d_B = d_A with random Hamiltonians")
    f.add_argument("--d-min", type=int, default=2)
    f.add_argument("--d-max", type=int, default=101)
    f.add_argument("--state", choices=("pure", "mixed"), default="mixed")
    f.add_argument("--fixed-purity", action="store_true", help="use --alpha1 as the battery purity at every d")
    f.add_argument("--mc-max-d", type=int, default=24)

    s = sub.add_parser("scan", parents=[common], help="scan one axis and fit the log-log slope")
    s.add_argument("--axis", choices=("dA", "dB", "n"), required=True)
    s.add_argument("--grid", type=_grid, required=True)
    s.add_argument("--process", choices=("unitary", "cptp", "general"), default=None, help="fit reported as the primary 'fit'")
    s.add_argument("--fit-min", type=float, default=None)
    s.add_argument("--fit-max", type=float, default=None)

    c = sub.add_parser("classify", parents=[common], help="order the three fluctuations at fixed d_A")
    c.add_argument("--beta1", type=str, default=None, help="mean auxiliary purity (default 2 dA / (dA^2 + 1))")
    c.add_argument("--certificates", action="store_true", help="emit one concrete example per ordering")
    c.add_argument("--sweep", type=int, default=0, help="also sweep this many alpha1 values over [1/dB, 1]")
    return parser


def _alpha1(args) -> Fraction:
    try:
        a = Fraction(args.alpha1)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"invalid --alpha1 {args.alpha1!r}")
    if not Fraction(1, args.dB) <= a <= 1:
        raise UsageError(f"--alpha1 must lie in [1/dB, 1], got {args.alpha1}")
    return a


def _emit(args, text: str) -> None:
    if args.out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        args.out.write_text(text)


def _config(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}


def cmd_verify(args) -> int:
    with Timer() as t:
        report = verify_suite(seed=args.seed, samples=args.samples)
    if (args.format or "text") == "json":
        manifest = RunManifest("verify", _config(args), args.seed, wall_time_s=t.elapsed)
        _emit(args, dump_json({
            "manifest": manifest.to_dict(),
            "checks": [vars(c) for c in report.checks],
            "tables": report.tables,
            "passed": report.passed,
        }))
    else:
        lines = report.lines()
        lines.append(f"{sum(c.passed for c in report.checks)}/{len(report.checks)} checks passed in {t.elapsed:.1f}s")
        _emit(args, "\n".join(lines))
    return EXIT_OK if report.passed else EXIT_FAIL


def _mc_processes(args, battery, what: str) -> dict:
    out = {}
    for proc in ProcessClass:
        est = estimate(McConfig(battery, proc, dA=args.dA, samples=args.samples, seed=args.seed), threads=args.threads)
        if what == "mean":
            out[proc.value] = {"value": est.mean, "se": est.se_mean}
        else:
            out[proc.value] = {"value": est.variance, "se": est.se_variance}
    return out


def cmd_average(args) -> int:
    a1 = _alpha1(args)
    battery = canonical_battery(args.dB, float(a1), args.sum_sq)
    with Timer() as t:
        result = {"analytic": analytic.avg_extractable_energy(battery)}
        if args.mode in ("mc", "both"):
            result["mc"] = _mc_processes(args, battery, "mean")
    return _report(args, "average", result, t.elapsed)


def cmd_fluct(args) -> int:
    a1 = _alpha1(args)
    if args.dA < 2:
        raise UsageError("--dA must be >= 2")
    inp = FluctuationInputs(args.dB, args.dA, float(a1), args.sum_sq)
    with Timer() as t:
        result = {"analytic": {
            "unitary": analytic.fluct_unitary(inp),
            "cptp": analytic.fluct_cptp_fixed_dA(inp),
            "general": analytic.fluct_general_fixed_dA(inp),
        }}
        if args.mode in ("mc", "both"):
            result["mc"] = _mc_processes(args, canonical_battery(args.dB, float(a1), args.sum_sq), "variance")
    return _report(args, "fluct", result, t.elapsed)


def _report(args, command: str, result: dict, elapsed: float) -> int:
    fmt_ = args.format or "text"
    if fmt_ == "json":
        manifest = RunManifest(command, _config(args), args.seed, wall_time_s=elapsed)
        _emit(args, dump_json({"manifest": manifest.to_dict(), **result}))
    elif fmt_ == "csv":
        lines = ["quantity,process,value,se"]
        a = result["analytic"]
        if isinstance(a, dict):
            lines += [f"analytic,{p},{fmt(v)}," for p, v in a.items()]
        else:
            lines.append(f"analytic,all,{fmt(a)},")
        for p, d in result.get("mc", {}).items():
            lines.append(f"mc,{p},{fmt(d['value'])},{fmt(d['se'])}")
        _emit(args, "\n".join(lines))
    else:
        lines = [f"{command}: dB={args.dB} dA={args.dA} alpha1={args.alpha1} sum_sq={args.sum_sq}"]
        a = result["analytic"]
        if isinstance(a, dict):
            lines += [f"  analytic {p:8s} {v:.12g}" for p, v in a.items()]
        else:
            lines.append(f"  analytic (all classes) {a:.12g}")
        for p, d in result.get("mc", {}).items():
            lines.append(f"  mc       {p:8s} {d['value']:.12g} +/- {d['se']:.3g}")
        _emit(args, "\n".join(lines))
    return EXIT_OK


def _emit_scan(args, command: str, result, elapsed: float, primary=None) -> int:
    fmt_ = args.format or "csv"
    if fmt_ == "json":
        manifest = RunManifest(command, _config(args), args.seed, wall_time_s=elapsed)
        payload = result.as_dict(primary)
        _emit(args, dump_json({"manifest": manifest.to_dict(), "points": payload["points"], "fit": payload["fit"],
                               "fits": payload["fits"], "extra_fits": payload["extra_fits"],
                               "fit_window": payload.get("fit_window")}))
    elif fmt_ == "csv":
        _emit(args, rows_to_csv(result.rows()))
    else:
        lines = [f"{command} axis={result.axis_name} ({len(result.points)} points, {elapsed:.1f}s)"]
        for name, f in {**result.fits, **result.extra_fits}.items():
            lines.append(f"  fit {name}: slope={f.slope:.6f} intercept={f.intercept:.6f} r2={f.r2:.6f} ({f.y} vs {f.x})")
        _emit(args, "\n".join(lines))
    return EXIT_OK


def cmd_fig1(args) -> int:
    alpha1 = float(_alpha1(args)) if args.fixed_purity else None
    with Timer() as t:
        result = run_fig1(args.d_min, args.d_max, mode=args.mode, samples=args.samples, seed=args.seed,
                          alpha1=alpha1, state=args.state, mc_max_d=args.mc_max_d, threads=args.threads)
    return _emit_scan(args, "fig1", result, t.elapsed)


def cmd_scan(args) -> int:
    a1 = float(_alpha1(args))
    window = None
    if args.fit_min is not None or args.fit_max is not None:
        window = (args.fit_min if args.fit_min is not None else min(args.grid),
                  args.fit_max if args.fit_max is not None else max(args.grid))
    with Timer() as t:
        result = scan(args.axis, args.grid, dB=args.dB, dA=args.dA, alpha1=a1, sum_sq=args.sum_sq,
                      mode=args.mode, samples=args.samples, seed=args.seed, threads=args.threads, window=window)
    return _emit_scan(args, "scan", result, t.elapsed, primary=args.process)


def cmd_classify(args) -> int:
    a1 = _alpha1(args)
    beta1 = Fraction(args.beta1) if args.beta1 is not None else None
    report = classify(args.dB, args.dA, a1, beta1)
    payload = {"report": report.as_dict()}
    lines = report.lines()
    if args.certificates:
        certs = ordering_certificates()
        payload["certificates"] = {o.value: r.as_dict() for o, r in certs.items()}
        for o in (Ordering.G_U_CPTP, Ordering.G_CPTP_U, Ordering.U_G_CPTP):
            r = certs.get(o)
            lines.append(f"certificate {o.value}: " + (f"dB={r.dB} dA={r.dA} alpha1={r.alpha1:.6g}" if r else "none found"))
    if args.sweep:
        counts = {o.value: 0 for o in Ordering}
        for k in range(args.sweep):
            alpha = Fraction(1, args.dB) + (1 - Fraction(1, args.dB)) * Fraction(k, max(1, args.sweep - 1))
            counts[analytic.classify_ordering(args.dB, args.dA, alpha, beta1).value] += 1
        payload["sweep"] = counts
        lines.append("sweep: " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    if (args.format or "text") == "json":
        manifest = RunManifest("classify", _config(args), None)
        _emit(args, dump_json({"manifest": manifest.to_dict(), **payload}))
    else:
        _emit(args, "\n".join(lines))
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "average": cmd_average,
    "fluct": cmd_fluct,
    "fig1": cmd_fig1,
    "scan": cmd_scan,
    "classify": cmd_classify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
