"""Symmetric-subspace invariance residual for commuting, noncommuting and unstructured inputs.

The residual vanishes for every multi-analytic operator, so only the
unstructured matrix separates from zero.
"""

import numpy as np

from charfact.charfun import char_fun
from charfact.constrained import invariance_residual
from charfact.fock import FockBasis
from charfact.rowcon import RowOperator, commutator_norm, random_commuting_row_contraction, random_row_contraction

K = 3


def row(label, T):
    th = char_fun(T, K)
    r = invariance_residual(th.assembled, T.n, K, th.dom_dim, th.cod_dim)
    print(f"{label:28s} commutator {commutator_norm(T):.2e}  residual {r:.2e}")


def main():
    E12 = np.array([[0, 1], [0, 0]])
    row("commuting (random)", random_commuting_row_contraction(0, 2, 3))
    row("noncommuting E12, E21", RowOperator(0.5 * np.stack([E12, E12.T])))
    row("noncommuting (random)", random_row_contraction(0, 2, 3))
    rng = np.random.default_rng(0)
    b = FockBasis(2, K)
    M = rng.standard_normal((b.dim, b.dim)) + 1j * rng.standard_normal((b.dim, b.dim))
    print(f"{'unstructured matrix':28s} {'':21s}  residual {invariance_residual(M, 2, K, 1, 1):.2e}")


if __name__ == "__main__":
    main()
