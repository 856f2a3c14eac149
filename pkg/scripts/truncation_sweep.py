"""Factorization residual, coefficient drift and runtime as the truncation grows."""

import argparse
import time

import numpy as np

from charfact.charfun import char_fun
from charfact.factorize import verify_factorization
from charfact.matkit import operator_norm
from charfact.rowcon import assemble_T, random_pair


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--dims", type=int, nargs=2, default=[2, 2])
    p.add_argument("--kmax", type=int, default=5)
    args = p.parse_args()

    pairs = [random_pair(args.seed + i, args.n, *args.dims) for i in range(args.count)]
    ref = [char_fun(assemble_T(pr), args.kmax) for pr in pairs]
    print(f"{'k':>3} {'max residual':>14} {'max drift':>12} {'seconds':>9}")
    for k in range(1, args.kmax + 1):
        start = time.perf_counter()
        certs = [verify_factorization(pr, k) for pr in pairs]
        elapsed = time.perf_counter() - start
        drift = max(operator_norm(c.lhs.coeffs[w] - r.coeffs[w])
                    for c, r in zip(certs, ref) for w in c.lhs.basis.words)
        print(f"{k:>3} {max(c.residual for c in certs):14.2e} {drift:12.2e} {elapsed:9.2f}")


if __name__ == "__main__":
    np.set_printoptions(precision=3)
    main()
