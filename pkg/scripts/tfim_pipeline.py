"""Run the stoquastic-to-Gibbs pipeline on a TFIM chain and print the report."""

import argparse
import json

from stoqtherm.models import tfim
from stoqtherm.pipelines import pipeline_stoq_to_gibbs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--max-factors", type=int, default=None)
    args = ap.parse_args()
    res = pipeline_stoq_to_gibbs(tfim(args.n), args.eps, max_factors=args.max_factors)
    print(json.dumps(res.report.to_dict(include_timing=True), indent=2, default=str))
    print(f"classical: n={res.output.n} k={res.output.k} k'={res.output.k_prime} terms={len(res.output.terms)}")


if __name__ == "__main__":
    main()
