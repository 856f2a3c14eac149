import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import unitary_group

from charfact.charfun import TruncatedMultiAnalytic, char_fun, is_multi_analytic
from charfact.cli import random_generic_w
from charfact.errors import DimensionMismatch, NotContractive, NotPurelyContractive, NotUnitary
from charfact.factorize import (
    converse_build,
    decompose_w,
    defect_unitaries,
    factorization_rhs,
    julia_halmos,
    product_from_w,
    verify_coincidence,
    verify_factorization,
)
from charfact.fock import EMPTY, FockBasis
from charfact.matkit import operator_norm, unitarity_residual
from charfact.rowcon import (
    RowOperator,
    UpperTriangularPair,
    assemble_T,
    defects,
    random_contraction,
    random_pair,
    random_row_contraction,
)
from conftest import cgauss

seeds = st.integers(0, 2**32 - 1)
small = st.integers(1, 3)
SWAP = np.array([[0, 1], [1, 0]])


def scalars(*xs):
    return RowOperator(np.array(xs, dtype=complex).reshape(len(xs), 1, 1))


def scalar_pair(lam, a=0, b=0):
    return UpperTriangularPair(scalars(a), scalars(b), np.array([[lam]]))


# -- Julia-Halmos ----------------------------------------------------------------

def test_julia_halmos_examples():
    assert np.allclose(julia_halmos([[0.0]]).matrix, SWAP, atol=1e-15)
    r = np.sqrt(0.75)
    assert np.allclose(julia_halmos([[0.5]]).matrix, [[0.5, r], [r, -0.5]], atol=1e-15)
    J = julia_halmos([[1.0]])
    assert J.dim_DL == 0 and J.dim_DLstar == 0
    assert np.allclose(J.matrix, [[1.0]])


def test_julia_halmos_rejects_expansion():
    with pytest.raises(NotContractive):
        julia_halmos([[1.2]])


def jh_cases():
    rng = np.random.default_rng(1234)
    cases = []
    for i in range(100):
        p, q = (int(x) for x in rng.integers(1, 5, size=2))
        kind = i % 4
        if kind == 0:
            L = random_contraction(rng, p, q, 0.9)
        elif kind == 1:  # rank deficient
            r = int(rng.integers(0, min(p, q)))
            L = cgauss(rng, p, r) @ cgauss(rng, r, q)
            s = operator_norm(L)
            L = 0.8 * L / s if s else L
        elif kind == 2:  # norm one
            L = random_contraction(rng, p, q, 1.0)
        else:  # partial isometry
            U, _, Vh = np.linalg.svd(cgauss(rng, p, q))
            r = min(p, q)
            L = U[:, :r] @ Vh[:r]
        cases.append((kind, L))
    return cases


@pytest.mark.parametrize("kind,L", jh_cases())
def test_julia_halmos_unitary(kind, L):
    J = julia_halmos(L)
    bound = 1e-10 if kind < 2 else 1e-6
    assert J.residual <= bound
    p, q = L.shape
    assert J.matrix.shape == (q + J.dim_DLstar, p + J.dim_DL)


# -- defect unitaries ------------------------------------------------------------

@pytest.mark.parametrize("lam", [0.3, 0.5, 0.9])
def test_defect_unitaries_scalar(lam):
    pair = scalar_pair(lam)
    u = defect_unitaries(pair)
    # sigma maps D_T onto D_A (+) D_L, both 2-dim; identity in these coordinates
    assert np.allclose(u.sigma, np.eye(2), atol=1e-12)
    # sigma_* in ambient coordinates is the swap
    dT = defects(assemble_T(pair))
    assert np.allclose(u.sigma_star @ dT.v_left.conj().T, SWAP, atol=1e-12)
    for key in ("sigma_identity", "sigma_star_identity"):
        assert u.residuals[key] <= 1e-12


def test_defect_unitaries_zero_coupling(rng):
    A = random_row_contraction(rng, 2, 2)
    B = random_row_contraction(rng, 2, 3)
    L = np.zeros((defects(A).rank_left, defects(B).rank_right))
    u = defect_unitaries(UpperTriangularPair(A, B, L))
    assert u.julia.dim_DL == defects(B).rank_right
    assert u.residuals["sigma_identity"] <= 1e-10
    assert u.residuals["sigma_star_identity"] <= 1e-10
    assert unitarity_residual(u.sigma) <= 1e-10


@pytest.mark.parametrize("seed", range(50))
def test_defect_unitaries_random(seed):
    rng = np.random.default_rng(seed)
    n, d1, d2 = (int(x) for x in rng.integers(1, 4, size=3))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        u = defect_unitaries(random_pair(rng, n, d1, d2))
    assert u.residuals["sigma_unitarity"] <= 1e-10
    assert u.residuals["sigma_star_unitarity"] <= 1e-10
    assert u.residuals["julia_halmos_unitarity"] <= 1e-10
    assert u.residuals["sigma_identity"] <= 1e-9
    assert u.residuals["sigma_star_identity"] <= 1e-9


# -- factorization ---------------------------------------------------------------

def test_rhs_zero_scalars():
    rhs = factorization_rhs(scalar_pair(0.0), 3)
    assert operator_norm(rhs.coeffs[EMPTY]) <= 1e-15
    # a diagonal of two shifts up to the sigma conjugation: theta_1 unitary, higher words vanish
    assert unitarity_residual(rhs.coeffs[(1,)]) <= 1e-12
    for w in rhs.basis.words:
        if len(w) >= 2:
            assert operator_norm(rhs.coeffs[w]) <= 1e-15


@given(seeds, small, small, small)
def test_rhs_shape_and_structure(seed, n, d1, d2):
    pair = random_pair(seed, n, d1, d2)
    rhs = factorization_rhs(pair, 2)
    lhs = char_fun(assemble_T(pair), 2)
    assert rhs.assembled.shape == lhs.assembled.shape
    assert is_multi_analytic(rhs)


@pytest.mark.parametrize("lam", [0.0, 0.5, 0.9])
def test_verify_scalar(lam):
    cert = verify_factorization(scalar_pair(lam), 4)
    assert cert.residual <= 1e-12 and cert.passed


@pytest.mark.parametrize("seed", range(20))
def test_verify_random(seed):
    rng = np.random.default_rng(seed)
    n, d1, d2 = (int(x) for x in rng.integers(1, 4, size=3))
    cert = verify_factorization(random_pair(rng, n, d1, d2), 3)
    assert cert.residual <= 1e-8 and cert.passed


def test_corrupted_coupling_fails(rng):
    pair = random_pair(rng, 2, 2, 2)
    T = assemble_T(pair)
    other = UpperTriangularPair(pair.A, pair.B, random_contraction(rng, *pair.L.shape))
    cert = verify_factorization(other, 3, T=T)
    assert cert.residual > 1e-3 and not cert.passed


# -- decompose_w -----------------------------------------------------------------

def test_decompose_examples(rng):
    w = julia_halmos([[0.5]]).matrix.conj().T
    L, M, N, K = decompose_w(w, 1, 1)
    assert np.allclose(L, [[0.5]])

    L, M, N, K = decompose_w(SWAP, 1, 1)
    assert np.allclose(L, 0) and np.allclose(M, 1) and np.allclose(N, 1) and np.allclose(K, 0)

    w = unitary_group.rvs(4, random_state=1)
    L, M, N, K = decompose_w(w, 2, 2)
    assert operator_norm(L.conj().T @ L + N.conj().T @ N - np.eye(2)) <= 1e-10


def test_decompose_errors():
    with pytest.raises(NotUnitary):
        decompose_w(np.ones((2, 2)), 1, 1)
    with pytest.raises(DimensionMismatch):
        decompose_w(np.eye(2), 3, 1)


# -- converse --------------------------------------------------------------------

def test_converse_julia_halmos_round_trip():
    zero = scalars(0)
    w = julia_halmos([[0.5]]).matrix.conj().T
    cert = converse_build(zero, zero, w, 1, 1, 4)
    assert cert.coincidence_residual <= 1e-10
    assert (cert.fprime_dim, cert.fstarprime_dim) == (0, 0)
    assert np.allclose(np.abs(cert.U), 1) and cert.U.shape == (1, 1)
    assert np.allclose(np.abs(cert.V), 1) and cert.V.shape == (1, 1)
    assert np.allclose(cert.pair.L, [[0.5]])
    assert cert.passed


def test_converse_rejects_vacuum_slice():
    zero = scalars(0)
    w0 = julia_halmos([[0.5]]).matrix.conj().T
    w = np.block([[w0, np.zeros((2, 1))], [np.zeros((1, 2)), np.eye(1)]])
    with pytest.raises(NotPurelyContractive) as e:
        converse_build(zero, zero, w, 2, 2, 3)
    assert e.value.fprime_dim >= 1
    assert e.value.vacuum_norm == pytest.approx(1)


def test_converse_shape_check():
    with pytest.raises(DimensionMismatch):
        converse_build(scalars(0), scalars(0), np.eye(3), 1, 1, 2)


@pytest.mark.parametrize("seed", range(20))
def test_converse_generic(seed):
    rng = np.random.default_rng(seed)
    n, d1, d2 = (int(x) for x in rng.integers(1, 4, size=3))
    A = random_row_contraction(rng, n, d1)
    B = random_row_contraction(rng, n, d2)
    w = random_generic_w(rng, A, B)
    ra_s, rb = defects(A).rank_left, defects(B).rank_right
    f = w.shape[1] - ra_s
    cert = converse_build(A, B, w, f, w.shape[0] - rb, 3)
    assert cert.coincidence_residual <= 1e-8
    assert cert.residuals["K1"] <= 1e-9
    assert cert.residuals["well_defined_N"] <= 1e-10
    assert cert.residuals["well_defined_M"] <= 1e-10
    assert cert.passed


def test_converse_product_matches_char_fun_of_rebuilt_tuple():
    # round trip: w = J_L (D_{A*} (+) D_L -> D_B (+) D_{L*}) reproduces the pair's T
    pair = random_pair(5, 2, 2, 2)
    J = julia_halmos(pair.L)
    cert = converse_build(pair.A, pair.B, J.matrix, J.dim_DL, J.dim_DLstar, 3)
    assert operator_norm(cert.pair.L - pair.L) <= 1e-12
    assert operator_norm(cert.T_hat.row - assemble_T(pair).row) <= 1e-12
    assert cert.coincidence_residual <= 1e-10


# -- coincidence -----------------------------------------------------------------

def test_coincidence_examples(rng):
    b = FockBasis(2, 2)
    M = TruncatedMultiAnalytic.from_coeffs(b, 2, 3, {w: cgauss(rng, 3, 2) for w in b.words})
    assert verify_coincidence(M, M, np.eye(2), np.eye(3)) == 0
    W, Ws = unitary_group.rvs(2, random_state=2), unitary_group.rvs(3, random_state=3)
    const = TruncatedMultiAnalytic.constant
    Mp = const(b, Ws) @ M @ const(b, W.conj().T)
    assert verify_coincidence(M, Mp, W, Ws) <= 1e-12
    other = TruncatedMultiAnalytic.from_coeffs(b, 2, 3, {w: cgauss(rng, 3, 2) for w in b.words})
    assert verify_coincidence(M, other, W, Ws) > 1e-3


def test_coincidence_errors(rng):
    b = FockBasis(1, 2)
    M = TruncatedMultiAnalytic.constant(b, np.eye(2))
    with pytest.raises(NotUnitary):
        verify_coincidence(M, M, 2 * np.eye(2), np.eye(2))
    with pytest.raises(DimensionMismatch):
        verify_coincidence(M, M, np.eye(3), np.eye(2))


def test_product_from_w_is_contractive(rng):
    A, B = random_row_contraction(rng, 2, 2), random_row_contraction(rng, 2, 1)
    w = random_generic_w(rng, A, B)
    th = product_from_w(A, B, w, 3)
    assert th.norm() <= 1 + 1e-10
    assert is_multi_analytic(th)
