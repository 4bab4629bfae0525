"""Measure the local Trotter error of a TFIM chain and fit its log-log slope."""

import argparse

from stoqtherm.models import tfim
from stoqtherm.pseq import loglog_slope, trotter_error_probe


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--field", type=float, default=1.0)
    ap.add_argument("--deltas", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025])
    args = ap.parse_args()
    pairs = trotter_error_probe(tfim(args.n, field=args.field), args.deltas)
    for delta, err in pairs:
        print(f"delta={delta:<8g} error={err:.3e}")
    print(f"slope={loglog_slope(pairs):.3f}")


if __name__ == "__main__":
    main()
