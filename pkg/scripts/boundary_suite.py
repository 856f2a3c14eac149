"""Factorization and converse at strictness 1, where defect ranks depend on the rank tolerance.

Runs with the relaxed tolerance 1e-6 and reports how many instances pass.
"""

import argparse

import numpy as np

from charfact.cli import random_generic_w
from charfact.errors import CharfactError
from charfact.factorize import converse_build, verify_factorization
from charfact.rowcon import defects, random_pair

TOL = 1e-6


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--trunc", type=int, default=3)
    args = p.parse_args()

    fac, conv, errors = [], [], []
    for seed in range(args.seed, args.seed + args.count):
        rng = np.random.default_rng(seed)
        n, d1, d2 = (int(x) for x in rng.integers(1, 4, size=3))
        pair = random_pair(rng, n, d1, d2, strictness=1.0)
        try:
            fac.append(verify_factorization(pair, args.trunc, tol=TOL).residual)
            w = random_generic_w(rng, pair.A, pair.B)
            f = w.shape[1] - defects(pair.A).rank_left
            fs = w.shape[0] - defects(pair.B).rank_right
            conv.append(converse_build(pair.A, pair.B, w, f, fs, args.trunc, tol=TOL).coincidence_residual)
        except CharfactError as e:
            errors.append((seed, type(e).__name__))
    fac, conv = np.array(fac), np.array(conv)
    print(f"factorization: {np.sum(fac <= TOL)}/{len(fac)} within {TOL:g}, max {fac.max(initial=0):.2e}")
    print(f"converse:      {np.sum(conv <= TOL)}/{len(conv)} within {TOL:g}, max {conv.max(initial=0):.2e}")
    for seed, name in errors:
        print(f"seed {seed}: {name}")


if __name__ == "__main__":
    main()
