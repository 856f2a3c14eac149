"""Row operators, defect data and upper-triangular row contractions.

A row operator ``T = (T_1, ..., T_n)`` with blocks ``dim_out x dim_in`` is
stored as an array of shape ``(n, dim_out, dim_in)``.  Its row matrix
``[T_1 ... T_n]`` acts on ``C^n (x) H_in`` in tuple-major order: the
coordinate ``(j, i)`` sits at index ``j * dim_in + i``.

For a tuple on ``H_1 (+) H_2`` each ``T_j`` is one square block
``[[A_j, X_j], [0, B_j]]``.  The other common ordering of the domain,
``(C^n (x) H_1) (+) (C^n (x) H_2)``, is reached with :func:`split_permutation`.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.stats import unitary_group

from . import matkit
from .errors import DimensionMismatch, NotAContraction, NotContractive, NotFactorable
from .matkit import adjoint, operator_norm, pinv, psd_sqrt, range_isometry

CONTRACTION_SLACK = 1e-10
EXTRACT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class RowOperator:
    blocks: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=complex)
        if b.ndim != 3 or b.shape[0] < 1:
            raise DimensionMismatch(f"blocks must have shape (n, rows, cols), got {b.shape}")
        b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @classmethod
    def from_blocks(cls, blocks):
        return cls(np.stack([matkit.as_matrix(b) for b in blocks]))

    @classmethod
    def from_row(cls, row, n):
        row = matkit.as_matrix(row)
        if row.shape[1] % n:
            raise DimensionMismatch(f"{row.shape[1]} columns do not split into {n} blocks")
        d = row.shape[1] // n
        return cls(np.stack([row[:, j * d:(j + 1) * d] for j in range(n)]))

    @property
    def n(self):
        return self.blocks.shape[0]

    @property
    def dim_out(self):
        return self.blocks.shape[1]

    @property
    def dim_in(self):
        return self.blocks.shape[2]

    @property
    def row(self):
        """The ``dim_out x (n * dim_in)`` row matrix."""
        return np.concatenate(list(self.blocks), axis=1)

    def __getitem__(self, j):
        return self.blocks[j]

    def __repr__(self):
        return f"RowOperator(n={self.n}, dim_out={self.dim_out}, dim_in={self.dim_in})"


@dataclass(frozen=True, eq=False)
class DefectData:
    d_right: np.ndarray  # D_T on C^n (x) H_in
    d_left: np.ndarray  # D_{T*} on H_out
    v_right: np.ndarray  # isometry onto D_T's range
    v_left: np.ndarray  # isometry onto D_{T*}'s range

    @property
    def rank_right(self):
        return self.v_right.shape[1]

    @property
    def rank_left(self):
        return self.v_left.shape[1]


def is_row_contraction(T, slack=CONTRACTION_SLACK):
    """True iff the largest eigenvalue of ``T T*`` is at most ``1 + slack``."""
    row = T.row
    if row.size == 0:
        return True
    top = np.linalg.eigvalsh(row @ adjoint(row))[-1]
    return bool(top <= 1 + slack)


def defects(T, tol=None):
    """Defect operators and range isometries of a row contraction."""
    if not is_row_contraction(T):
        norm = operator_norm(T.row)
        raise NotAContraction(f"row norm {norm:.6g} exceeds 1", norm=norm)
    row = T.row
    # accepted rows may exceed norm 1 by the contraction slack
    slack = 2 * CONTRACTION_SLACK
    d_right = psd_sqrt(np.eye(row.shape[1]) - adjoint(row) @ row, slack)
    d_left = psd_sqrt(np.eye(row.shape[0]) - row @ adjoint(row), slack)
    return DefectData(d_right, d_left, range_isometry(d_right, tol), range_isometry(d_left, tol))


def intertwining_residual(T, dd=None):
    """``||T D_T - D_{T*} T||`` for the row matrix."""
    dd = dd or defects(T)
    row = T.row
    return operator_norm(row @ dd.d_right - dd.d_left @ row)


def is_commuting(T, tol=1e-10):
    return commutator_norm(T) <= tol


def commutator_norm(T):
    """``max_{i,j} ||T_i T_j - T_j T_i||``."""
    if T.dim_in != T.dim_out:
        raise DimensionMismatch("commutators need a tuple acting on one space")
    worst = 0.0
    for i in range(T.n):
        for j in range(i + 1, T.n):
            worst = max(worst, operator_norm(T[i] @ T[j] - T[j] @ T[i]))
    return worst


# -- upper-triangular tuples ---------------------------------------------------

def split_permutation(n, d1, d2):
    """Index array ``p`` with ``x_split = x_tuple[p]``.

    ``x_tuple`` is ordered ``C^n (x) (H_1 (+) H_2)`` (tuple-major) and
    ``x_split`` is ordered ``(C^n (x) H_1) (+) (C^n (x) H_2)``.
    """
    d = d1 + d2
    first = [j * d + i for j in range(n) for i in range(d1)]
    second = [j * d + d1 + i for j in range(n) for i in range(d2)]
    return np.array(first + second, dtype=int)


def split_row(T, d1):
    """Row matrix of ``T`` with columns in split order."""
    d2 = T.dim_in - d1
    return T.row[:, split_permutation(T.n, d1, d2)]


@dataclass(frozen=True, eq=False)
class UpperTriangularPair:
    """Row contractions ``A`` on ``H_1``, ``B`` on ``H_2`` and a coupling ``L``.

    ``L`` is a matrix in defect coordinates, mapping the coordinates of
    ``D_B`` (columns of ``B``'s right range isometry) to those of
    ``D_{A*}``.
    """

    A: RowOperator
    B: RowOperator
    L: np.ndarray
    tol: matkit.RankTolerance = None

    def __post_init__(self):
        if self.A.n != self.B.n:
            raise DimensionMismatch(f"tuple lengths differ: {self.A.n} vs {self.B.n}")
        L = matkit.as_matrix(self.L)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "tol", matkit.resolve_tol(self.tol))
        if L.shape != (self.defects_A.rank_left, self.defects_B.rank_right):
            raise DimensionMismatch(
                f"L has shape {L.shape}, expected "
                f"{(self.defects_A.rank_left, self.defects_B.rank_right)}")

    @cached_property
    def defects_A(self):
        return defects(self.A, self.tol)

    @cached_property
    def defects_B(self):
        return defects(self.B, self.tol)

    @property
    def n(self):
        return self.A.n

    @property
    def d1(self):
        return self.A.dim_out

    @property
    def d2(self):
        return self.B.dim_out

    @cached_property
    def L_ambient(self):
        """``L`` as a map ``C^n (x) H_2 -> H_1``."""
        return self.defects_A.v_left @ self.L @ adjoint(self.defects_B.v_right)

    @cached_property
    def X_row(self):
        """``D_{A*} L D_B`` as a ``d1 x n*d2`` row matrix."""
        return self.defects_A.d_left @ self.L_ambient @ self.defects_B.d_right


def assemble_T(pair):
    """The row contraction ``T_j = [[A_j, X_j], [0, B_j]]``."""
    if operator_norm(pair.L) > 1 + CONTRACTION_SLACK:
        raise NotContractive(f"||L|| = {operator_norm(pair.L):.6g}", norm=operator_norm(pair.L))
    n, d1, d2 = pair.n, pair.d1, pair.d2
    X = RowOperator.from_row(pair.X_row, n)
    blocks = np.zeros((n, d1 + d2, d1 + d2), dtype=complex)
    blocks[:, :d1, :d1] = pair.A.blocks
    blocks[:, :d1, d1:] = X.blocks
    blocks[:, d1:, d1:] = pair.B.blocks
    return RowOperator(blocks)


def split_T(T, d1, tol=1e-12):
    """Recover ``(A, B, X)`` from a block upper-triangular ``T``."""
    lower = T.blocks[:, d1:, :d1]
    if lower.size and np.abs(lower).max() > tol:
        raise DimensionMismatch("T is not block upper triangular for this split")
    A = RowOperator(T.blocks[:, :d1, :d1])
    B = RowOperator(T.blocks[:, d1:, d1:])
    X = RowOperator(T.blocks[:, :d1, d1:])
    return A, B, X


def extract_L(A, B, X, tol=None, check_tol=EXTRACT_TOL):
    """Solve ``X = D_{A*} L D_B`` for ``L`` in defect coordinates.

    Raises NotFactorable when ``X`` leaves the range constraint and
    NotContractive when the solution has norm above ``1 + check_tol``.
    """
    dA = defects(A, tol)
    dB = defects(B, tol)
    X_row = X.row if isinstance(X, RowOperator) else matkit.as_matrix(X)
    if X_row.shape != (A.dim_out, B.n * B.dim_in):
        raise DimensionMismatch(f"X has shape {X_row.shape}")
    L = adjoint(dA.v_left) @ pinv(dA.d_left, tol) @ X_row @ pinv(dB.d_right, tol) @ dB.v_right
    recon = dA.d_left @ dA.v_left @ L @ adjoint(dB.v_right) @ dB.d_right
    resid = operator_norm(recon - X_row)
    if resid > check_tol:
        raise NotFactorable(f"||D_A* L D_B - X|| = {resid:.3e}", residual=resid)
    norm = operator_norm(L)
    if norm > 1 + check_tol:
        raise NotContractive(f"||L|| = {norm:.6g} > 1", norm=norm)
    return L


# -- seeded generators ---------------------------------------------------------

def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def complex_gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _scaled(blocks, strictness):
    T = RowOperator(blocks)
    norm = operator_norm(T.row)
    if norm == 0:
        return T
    return RowOperator(T.blocks * (strictness / norm))


def random_row_contraction(seed, n, dim, strictness=0.9, dim_in=None):
    """Complex Gaussian blocks scaled so the row norm equals ``strictness``."""
    if n < 1 or dim < 1:
        raise ValueError("need n >= 1 and dim >= 1")
    if not 0 < strictness <= 1:
        raise ValueError("strictness must lie in (0, 1]")
    rng = _rng(seed)
    dim_in = dim if dim_in is None else dim_in
    return _scaled(complex_gaussian(rng, (n, dim, dim_in)), strictness)


def random_contraction(seed, rows, cols, strictness=0.9):
    """A plain matrix of norm ``strictness`` (zero-size shapes allowed)."""
    rng = _rng(seed)
    M = complex_gaussian(rng, (rows, cols))
    norm = operator_norm(M)
    return M if norm == 0 else M * (strictness / norm)


def random_pair(seed, n, d1, d2, strictness=0.9, tol=None):
    rng = _rng(seed)
    A = random_row_contraction(rng, n, d1, strictness)
    B = random_row_contraction(rng, n, d2, strictness)
    dA, dB = defects(A, tol), defects(B, tol)
    L = random_contraction(rng, dA.rank_left, dB.rank_right, strictness)
    return UpperTriangularPair(A, B, L, tol)


def random_upper_triangular(seed, n, d1, d2, strictness=0.9):
    """Random contraction with the lower-left blocks zeroed, then rescaled."""
    rng = _rng(seed)
    blocks = complex_gaussian(rng, (n, d1 + d2, d1 + d2))
    blocks[:, d1:, :d1] = 0
    return _scaled(blocks, strictness)


def _commuting_family(rng, n, G, degree=2):
    d = G.shape[0]
    powers = [np.eye(d, dtype=complex)]
    for _ in range(degree):
        powers.append(powers[-1] @ G)
    coeffs = complex_gaussian(rng, (n, degree + 1))
    return np.stack([sum(c * P for c, P in zip(coeffs[j], powers)) for j in range(n)])


def random_commuting_row_contraction(seed, n, dim, strictness=0.9):
    """Polynomials in one upper-triangular matrix, conjugated by a random unitary."""
    rng = _rng(seed)
    G = np.triu(complex_gaussian(rng, (dim, dim)))
    Q = unitary_group.rvs(dim, random_state=rng) if dim > 1 else np.ones((1, 1))
    fam = _commuting_family(rng, n, G)
    return _scaled(Q @ fam @ adjoint(Q), strictness)


def random_commuting_pair(seed, n, d1, d2, strictness=0.9, tol=None):
    """A pair whose assembled tuple commutes.

    ``T_j`` are polynomials in one block upper-triangular matrix, so they
    commute and leave ``H_1`` invariant; ``L`` is then read off the
    corner blocks.
    """
    rng = _rng(seed)
    G = complex_gaussian(rng, (d1 + d2, d1 + d2))
    G[d1:, :d1] = 0
    U1 = unitary_group.rvs(d1, random_state=rng) if d1 > 1 else np.ones((1, 1))
    U2 = unitary_group.rvs(d2, random_state=rng) if d2 > 1 else np.ones((1, 1))
    U = matkit.block_diag(U1, U2)
    T = _scaled(U @ _commuting_family(rng, n, G) @ adjoint(U), strictness)
    A, B, X = split_T(T, d1)
    return UpperTriangularPair(A, B, extract_L(A, B, X, tol), tol)
