"""Log-log scaling scans along d_A, d_B and the auxiliary-average length n.

    python scripts/run_scans.py --out results/scans
"""

import argparse
from pathlib import Path

from qbattery import analytic
from qbattery.harness.io import RunManifest, Timer, dump_json, rows_to_csv
from qbattery.harness.scan import scan

SCANS = {
    "dA": dict(grid=list(range(50, 501, 50)), dB=2),
    "dB": dict(grid=list(range(50, 501, 50)), dA=2),
    "n": dict(grid=[2**k for k in range(4, 14)], dB=2),
}


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--out", type=Path, default=Path("results/scans"))
    p.add_argument("--alpha1", type=float, default=1.0)
    p.add_argument("--sum-sq", type=float, default=1.0)
    p.add_argument("--full-window", action="store_true", help="fit over the whole grid instead of the default window")
    args = p.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    for axis, kw in SCANS.items():
        grid = kw["grid"]
        window = (grid[0], grid[-1]) if args.full_window else None
        with Timer() as t:
            r = scan(axis, grid, dB=kw.get("dB", 2), dA=kw.get("dA", 2), alpha1=args.alpha1, sum_sq=args.sum_sq, window=window)
        (args.out / f"scan_{axis}.csv").write_text(rows_to_csv(r.rows()))
        manifest = RunManifest("run_scans", {"axis": axis, **kw, **{k: str(v) for k, v in vars(args).items()}}, None, wall_time_s=t.elapsed)
        (args.out / f"scan_{axis}.json").write_text(dump_json({"manifest": manifest.to_dict(), **r.as_dict()}))
        print(f"axis {axis} (fit window {r.fit_window})")
        for proc, f in r.fits.items():
            pred = analytic.scaling_exponent_prediction(proc, axis)
            note = " with log correction" if pred.log_correction else ""
            print(f"  {proc:8s} slope {f.slope:+.4f}  predicted {pred.slope:+.1f}{note}  r2 {f.r2:.6f}")
        for name, f in r.extra_fits.items():
            print(f"  {name}: slope {f.slope:+.4f} r2 {f.r2:.6f}")


if __name__ == "__main__":
    main()
