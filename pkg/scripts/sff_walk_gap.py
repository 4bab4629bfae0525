"""Compare the SFF walk spectral gap with beta times the SFF Hamiltonian gap."""

import argparse

import numpy as np

from stoqtherm.gibbs2sff import build_sff
from stoqtherm.hamcore import ground_space
from stoqtherm.models import random_classical
from stoqtherm.samplers import default_beta, sff_walk_kernel, spectral_gap


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    for n in args.sizes:
        hc = random_classical(n, rng)
        beta = default_beta(hc)
        walk = spectral_gap(sff_walk_kernel(hc, beta))
        ham = ground_space(build_sff(hc).h_sff).gap
        print(f"n={n} beta={beta:.4f} walk_gap={walk:.6e} beta*gap={beta * ham:.6e} diff={abs(walk - beta * ham):.1e}")


if __name__ == "__main__":
    main()
