"""Julia-Halmos matrices, defect unitaries and factorization certificates.

For an upper-triangular row contraction ``T = [[A, D_{A*} L D_B], [0, B]]``
the characteristic function splits as

    Theta_T = (I (x) sigma_*^{-1}) diag(Theta_B, I) (I (x) J_L) diag(Theta_A, I) (I (x) sigma)

and, conversely, a product built from any unitary ``w`` in place of
``J_L`` coincides with the characteristic function of an assembled tuple
once it is purely contractive.  Both directions are checked here on the
truncated Fock space, where they hold exactly.

Direct sums of defect spaces are concatenations of defect coordinates,
first summand first.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import matkit
from .charfun import TruncatedMultiAnalytic, char_fun, direct_sum, identity_op, is_purely_contractive
from .errors import (
    DimensionMismatch,
    NotContractive,
    NotPurelyContractive,
    NotUnitary,
    RankDeficiencyWarning,
)
from .fock import EMPTY, FockBasis
from .matkit import adjoint, operator_norm, pinv, psd_sqrt, range_isometry, unitarity_residual
from .rowcon import UpperTriangularPair, assemble_T, defects, split_permutation

UNITARY_TOL = 1e-10
EQ2_TOL = 1e-9
K1_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class JuliaHalmos:
    """``J_L = [[L*, D_L], [D_{L*}, -L]]`` in defect coordinates.

    For ``L`` of shape ``p x q`` the matrix maps ``C^p (+) D_L`` onto
    ``C^q (+) D_{L*}``; ``D_L`` and ``D_{L*}`` carry the coordinates of the
    range isometries ``v_L`` and ``v_Lstar``.
    """

    L: np.ndarray
    d_L: np.ndarray  # (I - L*L)^{1/2}
    d_Lstar: np.ndarray  # (I - LL*)^{1/2}
    v_L: np.ndarray
    v_Lstar: np.ndarray
    matrix: np.ndarray
    residual: float

    @property
    def dim_DL(self):
        return self.v_L.shape[1]

    @property
    def dim_DLstar(self):
        return self.v_Lstar.shape[1]


def julia_halmos(L, tol=None):
    L = matkit.as_matrix(L)
    norm = operator_norm(L)
    if norm > 1 + UNITARY_TOL:
        raise NotContractive(f"||L|| = {norm:.6g} > 1", norm=norm)
    p, q = L.shape
    d_L = psd_sqrt(np.eye(q) - adjoint(L) @ L)
    d_Ls = psd_sqrt(np.eye(p) - L @ adjoint(L))
    v_L = range_isometry(d_L, tol)
    v_Ls = range_isometry(d_Ls, tol)
    J = _blocks(
        [adjoint(L), d_L @ v_L],
        [adjoint(v_Ls) @ d_Ls, -adjoint(v_Ls) @ L @ v_L],
    )
    return JuliaHalmos(L, d_L, d_Ls, v_L, v_Ls, J, unitarity_residual(J))


@dataclass(frozen=True, eq=False)
class DefectUnitaries:
    sigma: np.ndarray  # D_T -> D_A (+) D_L
    sigma_star: np.ndarray  # D_{T*} -> D_{B*} (+) D_{L*}
    julia: JuliaHalmos
    residuals: dict = field(default_factory=dict)


def _blocks(*rows):
    """``np.block`` that tolerates zero-size pieces."""
    return np.concatenate([np.concatenate(r, axis=1) for r in rows], axis=0)


def defect_unitaries(pair, tol=None, T=None):
    """The unitaries ``sigma``, ``sigma_*`` solved from their defining identities.

    ``sigma D_T = [[D_A, -A* L D_B], [0, D_L D_B]]`` and
    ``sigma_* D_{T*} = [[-B L* D_{A*}, D_{B*}], [D_{L*} D_{A*}, 0]]``,
    with the right-hand sides written in the split ordering of the domain.
    """
    tol = tol if tol is not None else pair.tol
    T = assemble_T(pair) if T is None else T
    dA, dB, dT = pair.defects_A, pair.defects_B, defects(T, tol)
    J = julia_halmos(pair.L, tol)
    n, d1, d2 = pair.n, pair.d1, pair.d2
    A_row, B_row, Lam = pair.A.row, pair.B.row, pair.L_ambient

    # D_L acts on D_B coordinates; lift it back to C^n (x) H_2.
    DL_DB = adjoint(J.v_L) @ J.d_L @ adjoint(dB.v_right) @ dB.d_right
    M = _blocks(
        [adjoint(dA.v_right) @ dA.d_right, -adjoint(dA.v_right) @ adjoint(A_row) @ Lam @ dB.d_right],
        [np.zeros((J.dim_DL, n * d1)), DL_DB],
    )
    M = M[:, np.argsort(split_permutation(n, d1, d2))]  # split order -> tuple order

    DLs_DAs = adjoint(J.v_Lstar) @ J.d_Lstar @ adjoint(dA.v_left) @ dA.d_left
    M_star = _blocks(
        [-adjoint(dB.v_left) @ B_row @ adjoint(Lam) @ dA.d_left, adjoint(dB.v_left) @ dB.d_left],
        [DLs_DAs, np.zeros((J.dim_DLstar, d2))],
    )

    sigma = M @ pinv(dT.d_right, tol) @ dT.v_right
    sigma_star = M_star @ pinv(dT.d_left, tol) @ dT.v_left
    res = {
        "sigma_unitarity": unitarity_residual(sigma),
        "sigma_star_unitarity": unitarity_residual(sigma_star),
        "sigma_identity": operator_norm(sigma @ adjoint(dT.v_right) @ dT.d_right - M),
        "sigma_star_identity": operator_norm(sigma_star @ adjoint(dT.v_left) @ dT.d_left - M_star),
        "julia_halmos_unitarity": J.residual,
    }
    if max(res["sigma_identity"], res["sigma_star_identity"]) > EQ2_TOL:
        warnings.warn(RankDeficiencyWarning(
            "pseudoinverse dropped directions not annihilated by the target: "
            f"identity residuals {res['sigma_identity']:.3e}, {res['sigma_star_identity']:.3e}"))
    return DefectUnitaries(sigma, sigma_star, J, res)


def _inverse(U):
    if U.shape[0] != U.shape[1]:
        raise NotUnitary(f"defect unitary has shape {U.shape}", residual=float("inf"))
    return pinv(U)


def factorization_rhs(pair, k, tol=None, units=None):
    """``(I (x) sigma_*^{-1}) diag(Theta_B, I) (I (x) J_L) diag(Theta_A, I) (I (x) sigma)``."""
    units = units or defect_unitaries(pair, tol)
    J = units.julia
    theta_A = char_fun(pair.A, k, pair.tol)
    theta_B = char_fun(pair.B, k, pair.tol)
    basis = theta_A.basis
    left = direct_sum(theta_A, identity_op(basis, J.dim_DL))
    right = direct_sum(theta_B, identity_op(basis, J.dim_DLstar))
    const = TruncatedMultiAnalytic.constant
    return (const(basis, _inverse(units.sigma_star)) @ right @ const(basis, J.matrix)
            @ left @ const(basis, units.sigma))


@dataclass(frozen=True, eq=False)
class FactorizationCertificate:
    lhs: TruncatedMultiAnalytic = field(repr=False)
    rhs: TruncatedMultiAnalytic = field(repr=False)
    residual: float
    residuals: dict
    k: int
    tol: float

    @property
    def passed(self):
        return (self.residual <= self.tol
                and self.residuals["sigma_unitarity"] <= UNITARY_TOL
                and self.residuals["sigma_star_unitarity"] <= UNITARY_TOL
                and self.residuals["sigma_identity"] <= EQ2_TOL
                and self.residuals["sigma_star_identity"] <= EQ2_TOL)


def verify_factorization(pair, k, tol=1e-8, T=None):
    """Compare ``char_fun(T)`` with the five-factor product built from ``pair``.

    ``T`` defaults to ``assemble_T(pair)``; passing a different tuple is how
    negative controls are run.
    """
    T = assemble_T(pair) if T is None else T
    lhs = char_fun(T, k, pair.tol)
    units = defect_unitaries(pair, pair.tol)
    rhs = factorization_rhs(pair, k, units=units)
    if lhs.assembled.shape != rhs.assembled.shape:
        raise DimensionMismatch(f"lhs {lhs.assembled.shape} vs rhs {rhs.assembled.shape}")
    residual = operator_norm(lhs.assembled - rhs.assembled)
    return FactorizationCertificate(lhs, rhs, residual, dict(units.residuals), k, tol)


# -- the converse ------------------------------------------------------------------

def decompose_w(w, dom_split, cod_split):
    """Blocks ``(L, M, N, K)`` of ``w^*`` for ``w: D_{A*} (+) F -> D_B (+) F_*``.

    ``dom_split = dim D_{A*}`` and ``cod_split = dim D_B``.  ``L`` maps
    ``D_B -> D_{A*}``, ``M: F_* -> D_{A*}``, ``N: D_B -> F``, ``K: F_* -> F``.
    """
    w = matkit.as_matrix(w)
    if not (0 <= dom_split <= w.shape[1] and 0 <= cod_split <= w.shape[0]):
        raise DimensionMismatch(f"splits {dom_split}, {cod_split} do not fit w of shape {w.shape}")
    res = unitarity_residual(w)
    if res > UNITARY_TOL:
        raise NotUnitary(f"w is not unitary (residual {res:.3e})", residual=res)
    ws = adjoint(w)
    a, b = dom_split, cod_split
    return ws[:a, :b], ws[:a, b:], ws[a:, :b], ws[a:, b:]


@dataclass(frozen=True, eq=False)
class ConverseCertificate:
    T_hat: object
    pair: UpperTriangularPair
    U: np.ndarray
    V: np.ndarray
    theta: TruncatedMultiAnalytic = field(repr=False)
    fprime_dim: int
    fstarprime_dim: int
    coincidence_residual: float
    residuals: dict
    tol: float

    @property
    def passed(self):
        return (self.coincidence_residual <= self.tol
                and self.residuals["K1"] <= K1_TOL
                and self.fprime_dim == 0 and self.fstarprime_dim == 0)


def product_from_w(A, B, w, k, tol=None):
    """``diag(Theta_B, I_{F_*}) (I (x) w) diag(Theta_A, I_F)``."""
    theta_A = char_fun(A, k, tol)
    theta_B = char_fun(B, k, tol)
    w = matkit.as_matrix(w)
    f = w.shape[1] - theta_A.cod_dim
    fs = w.shape[0] - theta_B.dom_dim
    if f < 0 or fs < 0:
        raise DimensionMismatch(f"w of shape {w.shape} is too small for the defect spaces")
    basis = theta_A.basis
    left = direct_sum(theta_A, identity_op(basis, f))
    right = direct_sum(theta_B, identity_op(basis, fs))
    return right @ TruncatedMultiAnalytic.constant(basis, w) @ left


def converse_build(A, B, w, f_dim, fstar_dim, k, tol=1e-8, rank_tol=None):
    """Rebuild ``T_hat`` from ``w`` and certify that the product coincides with its
    characteristic function.

    Raises NotPurelyContractive when ``F'`` or ``F_*'`` is nonzero or the
    product fixes a vacuum vector.
    """
    rank_tol = matkit.resolve_tol(rank_tol)
    dA, dB = defects(A, rank_tol), defects(B, rank_tol)
    ra_s, rb = dA.rank_left, dB.rank_right
    w = matkit.as_matrix(w)
    if w.shape != (rb + fstar_dim, ra_s + f_dim):
        raise DimensionMismatch(
            f"w has shape {w.shape}, expected {(rb + fstar_dim, ra_s + f_dim)}")
    L, M, N, K = decompose_w(w, ra_s, rb)

    theta = product_from_w(A, B, w, k, rank_tol)
    vac = operator_norm(theta.coeffs[EMPTY])
    fprime = f_dim - matkit.numerical_rank(N, rank_tol)
    fstarprime = fstar_dim - matkit.numerical_rank(adjoint(M), rank_tol)
    if fprime or fstarprime or not is_purely_contractive(theta):
        raise NotPurelyContractive(
            f"product is not purely contractive: dim F' = {fprime}, dim F_*' = {fstarprime}, "
            f"||theta_empty|| = {vac:.6g}",
            fprime_dim=fprime, fstarprime_dim=fstarprime, vacuum_norm=vac)

    pair = UpperTriangularPair(A, B, L, rank_tol)
    T_hat = assemble_T(pair)
    units = defect_unitaries(pair, rank_tol, T=T_hat)
    J = units.julia
    # U (N x) = D_L x on D_B, V (M* y) = D_{L*} y on D_{A*}, in D_L / D_{L*} coordinates.
    U = adjoint(J.v_L) @ J.d_L @ pinv(N, rank_tol)
    V = adjoint(J.v_Lstar) @ J.d_Lstar @ pinv(adjoint(M), rank_tol)
    K1 = V @ adjoint(K) @ adjoint(U)

    res = {
        "U_unitarity": unitarity_residual(U),
        "V_unitarity": unitarity_residual(V),
        "U_equation": operator_norm(U @ N - adjoint(J.v_L) @ J.d_L),
        "V_equation": operator_norm(V @ adjoint(M) - adjoint(J.v_Lstar) @ J.d_Lstar),
        "well_defined_N": operator_norm(adjoint(N) @ N - J.d_L @ J.d_L),
        "well_defined_M": operator_norm(M @ adjoint(M) - J.d_Lstar @ J.d_Lstar),
        "K1": operator_norm(K1 + adjoint(J.v_Lstar) @ L @ J.v_L),
        "vacuum_norm": vac,
    }
    res.update(units.residuals)
    for name in ("U_unitarity", "V_unitarity"):
        if res[name] > UNITARY_TOL:
            raise NotUnitary(f"{name} residual {res[name]:.3e}", residual=res[name])

    basis = theta.basis
    const = TruncatedMultiAnalytic.constant
    u_prime = matkit.block_diag(np.eye(dA.rank_right), U)
    v_prime = matkit.block_diag(np.eye(dB.rank_left), V)
    theta_T = char_fun(T_hat, k, rank_tol)
    lhs = const(basis, v_prime) @ theta @ const(basis, adjoint(u_prime))
    rhs = const(basis, units.sigma_star) @ theta_T @ const(basis, _inverse(units.sigma))
    resid = operator_norm(lhs.assembled - rhs.assembled)
    return ConverseCertificate(T_hat, pair, U, V, theta, fprime, fstarprime, resid, res, tol)


def verify_coincidence(M, M_prime, W, W_star, tol=UNITARY_TOL):
    """``||(I (x) W_*) M - M' (I (x) W)||`` for unitaries ``W``, ``W_*``."""
    W, W_star = matkit.as_matrix(W), matkit.as_matrix(W_star)
    for name, X in (("W", W), ("W_star", W_star)):
        r = unitarity_residual(X)
        if r > tol:
            raise NotUnitary(f"{name} residual {r:.3e}", residual=r)
    if (M.basis != M_prime.basis or W.shape != (M_prime.dom_dim, M.dom_dim)
            or W_star.shape != (M_prime.cod_dim, M.cod_dim)):
        raise DimensionMismatch("coincidence data have incompatible shapes")
    const = TruncatedMultiAnalytic.constant
    lhs = const(M.basis, W_star) @ M
    rhs = M_prime @ const(M.basis, W)
    return operator_norm(lhs.assembled - rhs.assembled)
