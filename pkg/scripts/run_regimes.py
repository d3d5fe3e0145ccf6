"""Ordering of the three fixed-d_A fluctuations across (d_B, d_A, alpha1).

Prints one certificate per ordering, the exact U/CPTP threshold, and the
ordering counts for an alpha1 sweep at each requested battery dimension.

    python scripts/run_regimes.py --dB 2 8 50 200 --dA 2 --sweep 1000
"""

import argparse
from fractions import Fraction

from qbattery import analytic
from qbattery.analytic import Ordering
from qbattery.harness.scan import ordering_certificates


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--dB", type=int, nargs="+", default=[2, 8, 50, 200])
    p.add_argument("--dA", type=int, default=2)
    p.add_argument("--sweep", type=int, default=1000)
    args = p.parse_args()

    for o, r in ordering_certificates().items():
        print(f"certificate {o.value}: dB={r.dB} dA={r.dA} alpha1={r.alpha1:.6g}")
    for dB in args.dB:
        thr = analytic.unitary_cptp_threshold(dB, args.dA)
        counts = {o: 0 for o in Ordering}
        for k in range(args.sweep):
            a1 = Fraction(1, dB) + (1 - Fraction(1, dB)) * Fraction(k, args.sweep - 1)
            counts[analytic.classify_ordering(dB, args.dA, a1)] += 1
        g_over_u = Fraction(args.dA + dB, 1 + args.dA * dB)
        print(f"dB={dB} dA={args.dA}: U>CPTP iff alpha1 > {float(thr):.6g} (1/dB = {1 / dB:.6g}); "
              f"G>U iff alpha1 < {float(g_over_u):.6g}; "
              + ", ".join(f"{o.value}={c}" for o, c in counts.items()))


if __name__ == "__main__":
    main()
