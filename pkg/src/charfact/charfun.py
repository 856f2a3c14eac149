"""Characteristic functions as multi-analytic operators on ``Gamma_{<=k}``.

A multi-analytic operator ``M = sum_alpha R_alpha (x) theta_alpha`` is kept
both as its coefficient family and as the assembled matrix on
``Gamma_{<=k} (x) E``.  The coefficient ``theta_alpha`` is the block of
the assembled matrix at output ``e_{reverse(alpha)}``, input ``e_empty``.

The characteristic function is evaluated at ``r = 1`` directly.  The
operator ``sum_j R_j (x) T_j^*`` raises Fock degree, so it is nilpotent on
the truncation and the Neumann series for ``(I - R~ T~^*)^{-1}`` stops after
``k + 1`` terms.  Every identity below is therefore exact up to rounding.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import fock, matkit
from .errors import DimensionMismatch, NotAContraction, WordTooLong
from .fock import EMPTY, FockBasis, reverse
from .matkit import adjoint, operator_norm
from .rowcon import defects, is_row_contraction


# -- I (x) B helpers -----------------------------------------------------------

def kron_eye_left(B, X, D):
    """``np.kron(I_D, B) @ X`` without forming the Kronecker product."""
    p, q = B.shape
    m = X.shape[1]
    return (B @ X.reshape(D, q, m)).reshape(D * p, m)


def kron_eye_right(X, B, D):
    """``X @ np.kron(I_D, B)``."""
    p, q = B.shape
    return (X.reshape(X.shape[0], D, p) @ B).reshape(X.shape[0], D * q)


def kron_eye(B, D):
    return np.kron(np.eye(D), matkit.as_matrix(B))


@lru_cache(maxsize=64)
def _placements(basis):
    """For each word ``alpha``: the (output, input) indices ``(beta alpha~, beta)``."""
    out = []
    for w in basis.words:
        tail = reverse(w)
        fits = [b for b in basis.words if len(b) + len(w) <= basis.k]
        out.append((np.array([basis.index[b + tail] for b in fits]),
                    np.array([basis.index[b] for b in fits])))
    return tuple(out)


def _right_creations_sparse(basis):
    return [sp.csr_matrix(fock.right_creation(basis, j).real) for j in range(1, basis.n + 1)]


@lru_cache(maxsize=64)
def _right_shifts(basis):
    """Per letter ``j``: input indices ``beta`` (``|beta| < k``) and outputs ``beta j``."""
    ins = np.flatnonzero(basis.degrees < basis.k)
    return tuple((ins, np.array([basis.index[basis.words[i] + (j,)] for i in ins]))
                 for j in range(1, basis.n + 1))


@dataclass(frozen=True, eq=False)
class _ShiftedAdjoints:
    """``sum_j R_j (x) T_j^*`` applied blockwise over the Fock index.

    Works on the layout ``(d, D, m)`` so each letter costs one matrix product.
    """

    basis: FockBasis
    adj: np.ndarray  # (n, d, d) stack of T_j^*

    def _to(self, Y):
        D, d = self.basis.dim, self.adj.shape[1]
        return np.ascontiguousarray(Y.reshape(D, d, -1).transpose(1, 0, 2))

    def _from(self, Yt):
        d, D, m = Yt.shape
        return Yt.transpose(1, 0, 2).reshape(D * d, m)

    def _apply(self, Yt):
        d, D, m = Yt.shape
        Zt = np.zeros_like(Yt)
        for Tj, (ins, outs) in zip(self.adj, _right_shifts(self.basis)):
            Zt[:, outs] += (Tj @ Yt[:, ins].reshape(d, -1)).reshape(d, len(ins), m)
        return Zt

    def __matmul__(self, Y):
        return self._from(self._apply(self._to(Y)))

    def neumann(self, Y, k):
        Yt = self._to(matkit.as_matrix(Y).astype(complex))
        Zt = Yt
        for _ in range(k):
            Zt = Yt + self._apply(Zt)
        return self._from(Zt)


# -- truncated multi-analytic operators ----------------------------------------

@dataclass(frozen=True, eq=False)
class TruncatedMultiAnalytic:
    """Multi-analytic operator ``Gamma_{<=k} (x) E -> Gamma_{<=k} (x) E_*``."""

    basis: FockBasis
    dom_dim: int
    cod_dim: int
    coeffs: dict = field(repr=False)
    assembled: np.ndarray = field(repr=False)

    @classmethod
    def from_assembled(cls, basis, dom_dim, cod_dim, M):
        M = matkit.as_matrix(M)
        D = basis.dim
        if M.shape != (D * cod_dim, D * dom_dim):
            raise DimensionMismatch(f"assembled shape {M.shape} != {(D * cod_dim, D * dom_dim)}")
        M4 = M.reshape(D, cod_dim, D, dom_dim)
        coeffs = {w: M4[basis.index[reverse(w)], :, 0, :].copy() for w in basis.words}
        return cls(basis, dom_dim, cod_dim, coeffs, M)

    @classmethod
    def from_coeffs(cls, basis, dom_dim, cod_dim, coeffs):
        D = basis.dim
        M4 = np.zeros((D, cod_dim, D, dom_dim), dtype=complex)
        full = {}
        for w, (outs, ins) in zip(basis.words, _placements(basis)):
            theta = matkit.as_matrix(coeffs.get(w, np.zeros((cod_dim, dom_dim))))
            if theta.shape != (cod_dim, dom_dim):
                raise DimensionMismatch(f"coefficient {w} has shape {theta.shape}")
            full[w] = theta
            M4[outs, :, ins, :] = theta
        return cls(basis, dom_dim, cod_dim, full, M4.reshape(D * cod_dim, D * dom_dim))

    @classmethod
    def constant(cls, basis, W):
        """``I_Gamma (x) W``."""
        W = matkit.as_matrix(W)
        return cls.from_coeffs(basis, W.shape[1], W.shape[0], {EMPTY: W})

    @property
    def k(self):
        return self.basis.k

    def __matmul__(self, other):
        # R_alpha R_beta = R_{alpha beta}, so coefficients convolve over word splits
        if self.basis != other.basis or self.dom_dim != other.cod_dim:
            raise DimensionMismatch("incompatible multi-analytic operators")
        coeffs = {}
        for w in self.basis.words:
            acc = np.zeros((self.cod_dim, other.dom_dim), dtype=complex)
            for cut in range(len(w) + 1):
                acc += self.coeffs[w[:cut]] @ other.coeffs[w[cut:]]
            coeffs[w] = acc
        return TruncatedMultiAnalytic.from_coeffs(self.basis, other.dom_dim, self.cod_dim, coeffs)

    def norm(self):
        return operator_norm(self.assembled)


def direct_sum(M1, M2):
    """``diag(M1, M2)`` on ``Gamma (x) (E_1 (+) E_2)``."""
    if M1.basis != M2.basis:
        raise DimensionMismatch("different truncations")
    D = M1.basis.dim
    c1, d1, c2, d2 = M1.cod_dim, M1.dom_dim, M2.cod_dim, M2.dom_dim
    out = np.zeros((D, c1 + c2, D, d1 + d2), dtype=complex)
    out[:, :c1, :, :d1] = M1.assembled.reshape(D, c1, D, d1)
    out[:, c1:, :, d1:] = M2.assembled.reshape(D, c2, D, d2)
    return TruncatedMultiAnalytic.from_assembled(
        M1.basis, d1 + d2, c1 + c2, out.reshape(D * (c1 + c2), D * (d1 + d2)))


def identity_op(basis, dim):
    return TruncatedMultiAnalytic.constant(basis, np.eye(dim, dtype=complex))


def symbol_coefficient(M, word):
    """Read ``theta_word`` straight from the assembled matrix."""
    word = tuple(word)
    if len(word) > M.basis.k:
        raise WordTooLong(f"|{fock.format_word(word)}| > k = {M.basis.k}")
    D = M.basis.dim
    M4 = M.assembled.reshape(D, M.cod_dim, D, M.dom_dim)
    return M4[M.basis.index[reverse(word)], :, 0, :].copy()


def multi_analytic_residual(M):
    """``max_j || M (L_j (x) I) - (L_j (x) I) M ||`` on inputs of degree ``< k``."""
    basis = M.basis
    D = basis.dim
    if M.assembled.size == 0:
        return 0.0
    M4 = M.assembled.reshape(D, M.cod_dim, D, M.dom_dim)
    low = [w for w in basis.words if len(w) < basis.k]
    src = [basis.index[w] for w in low]
    worst = 0.0
    for j in range(1, basis.n + 1):
        tgt = [basis.index[(j,) + w] for w in low]
        lhs = M4[:, :, tgt, :]
        rhs = np.zeros_like(M4[:, :, src, :])
        rhs[tgt] = M4[src][:, :, src, :]
        diff = (lhs - rhs).reshape(D * M.cod_dim, len(src) * M.dom_dim)
        worst = max(worst, operator_norm(diff))
    return worst


def is_multi_analytic(M, tol=1e-10):
    return multi_analytic_residual(M) <= tol


def is_purely_contractive(M, margin=1e-10):
    """``||theta_empty|| < 1 - margin``."""
    return operator_norm(M.coeffs[EMPTY]) < 1 - margin


# -- the characteristic function -------------------------------------------------

@dataclass(frozen=True, eq=False)
class _Ambient:
    """Pieces of ``Theta_T(R)`` on ``Gamma (x) H`` before compression."""

    T: object
    basis: FockBasis
    dd: object
    RT: object  # sum_j R_j (x) T_j^*
    R_gamma: np.ndarray  # R~ composed with the shuffle, Gamma(x)(C^n(x)H) -> Gamma(x)H
    T_gamma: np.ndarray  # I (x) T_row
    theta: np.ndarray  # uncompressed Theta_T on Gamma (x) (C^n (x) H)

    def neumann(self, Y):
        return _neumann(self.RT, Y, self.basis.k)


def _neumann(RT, Y, k):
    """``sum_{m=0}^{k} RT^m Y`` by Horner's rule (the exact inverse of ``I - RT`` here)."""
    if isinstance(RT, _ShiftedAdjoints):
        return RT.neumann(Y, k)
    Z = Y
    for _ in range(k):
        Z = Y + RT @ Z
    return Z


def _check(T):
    if T.dim_in != T.dim_out:
        raise DimensionMismatch("characteristic functions need a tuple on one space")
    if not is_row_contraction(T):
        norm = operator_norm(T.row)
        raise NotAContraction(f"row norm {norm:.6g} exceeds 1", norm=norm)


def _ambient(T, k, tol=None):
    # tuples are immutable, so results can be shared between calls on the same object
    return _ambient_cached(T, k, matkit.resolve_tol(tol))


@lru_cache(maxsize=4)
def _ambient_cached(T, k, tol):
    _check(T)
    n, d = T.n, T.dim_out
    basis = FockBasis(n, k)
    D = basis.dim
    dd = defects(T, tol)
    Rs = _right_creations_sparse(basis)
    RT = _ShiftedAdjoints(basis, np.conj(np.swapaxes(T.blocks, 1, 2)))
    # R~ is the row (R_j (x) I_H) on C^n (x) (Gamma (x) H); the shuffle carries it
    # over to Gamma (x) (C^n (x) H) where I (x) D_T acts.
    R_tilde = sp.hstack([sp.kron(R, sp.identity(d)) for R in Rs]).toarray()
    p = fock.tensor_shuffle(D, n, d)
    R_gamma = np.empty_like(R_tilde, dtype=complex)
    R_gamma[:, p] = R_tilde
    T_gamma = kron_eye(T.row, D)
    Y = kron_eye_right(R_gamma, dd.d_right, D)
    theta = -T_gamma + kron_eye_left(dd.d_left, _neumann(RT, Y, k), D)
    return _Ambient(T, basis, dd, RT, R_gamma, T_gamma, theta)


def char_fun(T, k, tol=None):
    """Characteristic function of the row contraction ``T`` on ``Gamma_{<=k}``.

    Domain and codomain are in defect coordinates: ``Gamma (x) C^{rank D_T}``
    and ``Gamma (x) C^{rank D_{T*}}``.
    """
    if k < 1:
        raise ValueError("truncation k must be >= 1")
    amb = _ambient(T, k, tol)
    D = amb.basis.dim
    dd = amb.dd
    M = kron_eye_left(adjoint(dd.v_left), amb.theta, D)
    M = kron_eye_right(M, dd.v_right, D)
    return TruncatedMultiAnalytic.from_assembled(amb.basis, dd.rank_right, dd.rank_left, M)


def coefficient_oracle(T, word, tol=None):
    """``theta_{j_1..j_m i} = v_*^* D_{T*} T_{j_1}^* .. T_{j_m}^* E_i D_T v`` read off the series.

    Independent of the Fock-space matrices; used to cross-check them.
    """
    dd = defects(T, tol)
    d = T.dim_out
    if not word:
        return -adjoint(dd.v_left) @ T.row @ dd.v_right
    P = np.eye(d, dtype=complex)
    for letter in word[:-1]:
        P = P @ adjoint(T[letter - 1])
    i = word[-1] - 1
    E = np.zeros((d, T.n * d), dtype=complex)
    E[:, i * d:(i + 1) * d] = np.eye(d)
    return adjoint(dd.v_left) @ dd.d_left @ P @ E @ dd.d_right @ dd.v_right


def verify_lemma_identities(T, k, tol=None):
    """Operator-norm residuals of the two resolvent identities at ``r = 1``.

    ``Theta D_{T~} = D_{T~*} N (R~ - T~)`` and
    ``I + Theta T~^* = D_{T~*} N D_{T~*}`` with ``N = (I - R~ T~^*)^{-1}``.
    """
    amb = _ambient(T, k, tol)
    D = amb.basis.dim
    dd = amb.dd
    lhs1 = kron_eye_right(amb.theta, dd.d_right, D)
    rhs1 = kron_eye_left(dd.d_left, amb.neumann(amb.R_gamma - amb.T_gamma), D)
    lhs2 = np.eye(amb.theta.shape[0]) + amb.theta @ adjoint(amb.T_gamma)
    rhs2 = kron_eye_left(dd.d_left, amb.neumann(kron_eye(dd.d_left, D)), D)
    return operator_norm(lhs1 - rhs1), operator_norm(lhs2 - rhs2)
