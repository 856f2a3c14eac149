"""Commuting tuples: symmetric Fock compression and evaluation on the ball.

For a commuting row contraction the characteristic function compresses to
the symmetric Fock space, which is where the commutative theory lives.
There it is an analytic function on the unit ball of ``C^n``,

    theta_T(z) = -T + D_{T*} (I - sum_i z_i T_i^*)^{-1} Z D_T,   Z = (z_1 I, ..., z_n I),

and the upper-triangular factorization holds point by point.
"""

from dataclasses import dataclass, field
from itertools import product
from math import factorial

import numpy as np
from scipy.stats import qmc

from . import matkit
from .charfun import char_fun
from .errors import DimensionMismatch, NotAContraction, NotCommuting, OutsideBall, SamplingRestriction
from .factorize import _inverse, defect_unitaries
from .fock import FockBasis
from .matkit import adjoint, operator_norm
from .rowcon import assemble_T, commutator_norm, defects, is_row_contraction

COMMUTE_TOL = 1e-10
SERIES_SLACK = 1e-10
SERIES_L1_CAP = 0.5


@dataclass(frozen=True, eq=False)
class SymmetricBasis:
    """Orthonormal basis of the symmetric tensors inside ``Gamma_{<=k}``.

    Column ``c`` of ``sym_isometry`` is the normalized sum of ``e_alpha``
    over all words ``alpha`` whose letter counts equal ``multidegrees[c]``.
    """

    n: int
    k: int
    sym_isometry: np.ndarray = field(repr=False)
    multidegrees: tuple = field(repr=False)

    @property
    def dim(self):
        return len(self.multidegrees)

    @property
    def fock(self):
        return FockBasis(self.n, self.k)

    def projection(self):
        S = self.sym_isometry
        return S @ adjoint(S)


def multidegree(word, n):
    counts = [0] * n
    for letter in word:
        counts[letter - 1] += 1
    return tuple(counts)


def count_multidegrees(n, k):
    # stars and bars: C(n + k, n)
    return factorial(n + k) // (factorial(n) * factorial(k))


def symmetric_basis(n, k):
    fb = FockBasis(n, k)
    degs = sorted((m for m in product(range(k + 1), repeat=n) if sum(m) <= k),
                  key=lambda m: (sum(m), tuple(-x for x in m)))
    col = {m: c for c, m in enumerate(degs)}
    S = np.zeros((fb.dim, len(degs)), dtype=complex)
    for i, w in enumerate(fb.words):
        S[i, col[multidegree(w, n)]] = 1
    S /= np.sqrt(S.sum(axis=0).real)
    return SymmetricBasis(n, k, S, tuple(degs))


def _require_commuting(T, tol=COMMUTE_TOL):
    c = commutator_norm(T)
    if c > tol:
        raise NotCommuting(f"commutator norm {c:.3e} exceeds {tol:.0e}", commutator_norm=c)


def _ball_point(z, n):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.shape != (n,):
        raise DimensionMismatch(f"point has shape {z.shape}, expected ({n},)")
    r = np.linalg.norm(z)
    if r >= 1:
        raise OutsideBall(f"||z|| = {r:.6g} is not < 1")
    return z


def theta_point(T, z, tol=None):
    """Value of the characteristic function of a commuting ``T`` at ``z`` in the ball."""
    _require_commuting(T)
    if not is_row_contraction(T):
        norm = operator_norm(T.row)
        raise NotAContraction(f"row norm {norm:.6g} exceeds 1", norm=norm)
    z = _ball_point(z, T.n)
    d = T.dim_out
    dd = defects(T, tol)
    Z = np.hstack([zi * np.eye(d) for zi in z])
    resolvent_arg = np.eye(d) - sum(zi * adjoint(T[i]) for i, zi in enumerate(z))
    val = -T.row + dd.d_left @ np.linalg.solve(resolvent_arg, Z @ dd.d_right)
    return adjoint(dd.v_left) @ val @ dd.v_right


def monomial(z, word):
    return np.prod([z[letter - 1] for letter in word]) if word else 1.0


def series_value(theta, z):
    """``sum_{|alpha| <= k} z^alpha theta_alpha`` for a truncated characteristic function."""
    return sum(monomial(z, w) * c for w, c in theta.coeffs.items())


def series_vs_point(T, z, k, tol=None, theta=None):
    """Gap between the truncated power series and the closed form at ``z``.

    Needs ``sum |z_i| <= 1/2`` so the tail is at most ``2^{-k}``.
    """
    z = _ball_point(z, T.n)
    l1 = float(np.abs(z).sum())
    if l1 > SERIES_L1_CAP:
        raise SamplingRestriction(f"sum |z_i| = {l1:.6g} exceeds {SERIES_L1_CAP}")
    exact = theta_point(T, z, tol)
    theta = char_fun(T, k, tol) if theta is None else theta
    return operator_norm(exact - series_value(theta, z))


def series_bound(k):
    return 2.0 ** (-k) + SERIES_SLACK


def _sym_tensor(sb, dim):
    return np.kron(sb.sym_isometry, np.eye(dim))


def constrained_char_fun(T, k, tol=None):
    """``Theta_T`` compressed to the symmetric truncation (tensored with the defect spaces)."""
    _require_commuting(T)
    theta = char_fun(T, k, tol)
    sb = symmetric_basis(T.n, k)
    return adjoint(_sym_tensor(sb, theta.cod_dim)) @ theta.assembled @ _sym_tensor(sb, theta.dom_dim)


def invariance_residual(M, n, k, dom_dim, cod_dim):
    """``||P_perp M^* P_sym||`` for any matrix on ``Gamma_{<=k} (x) E -> Gamma_{<=k} (x) E_*``.

    Zero exactly when ``M^*`` maps symmetric tensors to symmetric tensors.
    """
    M = matkit.as_matrix(M)
    sb = symmetric_basis(n, k)
    S = sb.sym_isometry
    D, s = S.shape
    perp = np.eye(D) - sb.projection()
    X = adjoint(M).reshape(D, dom_dim, D, cod_dim)
    X = np.einsum("ab,bicj,cs->aisj", perp, X, S, optimize=True)
    return operator_norm(X.reshape(D * dom_dim, s * cod_dim))


def verify_invariance(T, k, tol=None):
    """Invariance of the symmetric subspace under ``Theta_T^*``."""
    _require_commuting(T)
    theta = char_fun(T, k, tol)
    return invariance_residual(theta.assembled, T.n, k, theta.dom_dim, theta.cod_dim)


# -- pointwise factorization -----------------------------------------------------

def sample_points(n, count, max_norm=0.95, l1_cap=None):
    """Deterministic points of the ball from an unscrambled Halton sequence.

    Coordinates ``2n`` of each Halton point give moduli and phases, the last
    one sets the radius.  The first point is the origin.
    """
    if count <= 0:
        return np.zeros((0, n), dtype=complex)
    u = qmc.Halton(d=2 * n + 1, scramble=False).random(count)
    z = u[:, :n] * np.exp(2j * np.pi * u[:, n:2 * n])
    norms = np.linalg.norm(z, axis=1)
    scale = np.divide(max_norm * u[:, -1], norms, out=np.zeros(count), where=norms > 0)
    z = z * scale[:, None]
    if l1_cap is not None:
        l1 = np.abs(z).sum(axis=1)
        shrink = np.divide(l1_cap, l1, out=np.ones(count), where=l1 > 0)
        # pull scaled points strictly inside so rounding cannot push them past the cap
        shrink = np.where(shrink < 1, shrink * (1 - 8 * np.finfo(float).eps), 1.0)
        z = z * shrink[:, None]
    return z


@dataclass(frozen=True, eq=False)
class ConstrainedCertificate:
    points: np.ndarray = field(repr=False)
    point_residuals: np.ndarray = field(repr=False)
    max_residual: float
    residuals: dict
    tol: float

    @property
    def passed(self):
        return self.max_residual <= self.tol


def factorization_at(units, A, B, z, tol=None):
    """``sigma_*^{-1} diag(theta_B(z), I) J_L diag(theta_A(z), I) sigma``."""
    J = units.julia
    left = matkit.block_diag(theta_point(A, z, tol), np.eye(J.dim_DL))
    right = matkit.block_diag(theta_point(B, z, tol), np.eye(J.dim_DLstar))
    return _inverse(units.sigma_star) @ right @ J.matrix @ left @ units.sigma


def verify_constrained_factorization(pair, points, tol=1e-8):
    T = assemble_T(pair)
    comm = {"T": commutator_norm(T), "A": commutator_norm(pair.A), "B": commutator_norm(pair.B)}
    _require_commuting(T)
    units = defect_unitaries(pair, pair.tol, T=T)
    points = np.atleast_2d(np.asarray(points, dtype=complex))
    res, norms = [], []
    for z in points:
        lhs = theta_point(T, z, pair.tol)
        res.append(operator_norm(lhs - factorization_at(units, pair.A, pair.B, z, pair.tol)))
        norms.append(operator_norm(lhs))
    res = np.array(res)
    residuals = {f"commutator_{name}": v for name, v in comm.items()}
    residuals.update(units.residuals)
    residuals["max_point_norm"] = max(norms, default=0.0)
    return ConstrainedCertificate(points, res, float(res.max(initial=0.0)), residuals, tol)
