"""Dense complex linear algebra: PSD square roots, range bases, pseudoinverses.

Matrices are plain 2-D ``numpy`` arrays of dtype ``complex128``.  Shapes
with a zero dimension are legal everywhere and stand for maps to or from
the zero space.
"""

import os
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, svds

from .errors import NotHermitian, NotPSD

EPS = np.finfo(float).eps

#: Negative eigenvalues of a PSD input down to
#: ``-CLAMP_FACTOR * eps * max(1, sigma_max)`` are rounding noise and get
#: clamped to zero.  The floor of 1 covers Gram matrices like ``I - T*T``
#: whose rounding error scales with ``I``, not with the (possibly tiny) result.
CLAMP_FACTOR = 10.0

RANK_TOL_ENV = "CHARFACT_RANK_TOL"


@dataclass(frozen=True)
class RankTolerance:
    """Relative cutoff for numerical rank decisions.

    Singular values ``<= relative_cutoff * sigma_max`` count as zero.
    """

    relative_cutoff: float = 1e-10

    def __post_init__(self):
        if not self.relative_cutoff >= 0:
            raise ValueError("relative_cutoff must be nonnegative")

    @classmethod
    def from_env(cls):
        """Default tolerance, overridden by ``$CHARFACT_RANK_TOL`` if set."""
        value = os.environ.get(RANK_TOL_ENV)
        if value is None or value.strip() == "":
            return cls()
        return cls(float(value))

    def rank(self, singular_values):
        s = np.asarray(singular_values)
        if s.size == 0 or s[0] == 0:
            return 0
        return int(np.count_nonzero(s > self.relative_cutoff * s[0]))


def resolve_tol(tol):
    if tol is None:
        return RankTolerance.from_env()
    if isinstance(tol, RankTolerance):
        return tol
    return RankTolerance(float(tol))


def as_matrix(M):
    """Coerce to a 2-D complex array (copying only when needed)."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    return M


def adjoint(M):
    return np.conj(M).T


def identity(n):
    return np.eye(n, dtype=complex)


#: Above this many entries the norm comes from Lanczos bidiagonalization.
LARGE = 40_000
#: Restart cap before falling back to the Gram matrix (clustered spectra stall ARPACK).
ARPACK_MAXITER = 300


def operator_norm(M):
    """Largest singular value; 0 for degenerate shapes."""
    M = as_matrix(M)
    if M.size == 0:
        return 0.0
    if M.size > LARGE and min(M.shape) > 2:
        return _large_norm(M)
    return float(np.linalg.svd(M, compute_uv=False)[0])


def _large_norm(M):
    scale = np.abs(M).max()
    if scale == 0:
        return 0.0
    X = M / scale
    try:
        s = svds(X, k=1, tol=0, maxiter=ARPACK_MAXITER, return_singular_vectors=False,
                 random_state=0)
        return float(scale * s[0])
    except ArpackNoConvergence:
        G = X @ adjoint(X) if X.shape[0] <= X.shape[1] else adjoint(X) @ X
        return float(scale * np.sqrt(max(np.linalg.eigvalsh(G)[-1], 0.0)))


def psd_sqrt(M, negative_slack=0.0):
    """Unique Hermitian PSD square root of a Hermitian PSD matrix.

    Raises NotHermitian when ``||M - M*||`` exceeds ``1e-10 * max(1, ||M||)``
    and NotPSD when an eigenvalue falls below the clamp band.  Eigenvalues
    inside the band ``|w| <= 10 eps max(1, ||M||)`` are set to zero, so a
    rounding-level eigenvalue does not turn into a spurious ``1e-8`` after
    the square root.  ``negative_slack`` widens the band on the negative side
    only, for callers that accept inputs slightly outside the PSD cone.
    """
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise NotHermitian(f"square matrix required, got shape {M.shape}")
    if M.size == 0:
        return M.copy()
    scale = operator_norm(M)
    asym = operator_norm(M - adjoint(M))
    if asym > 1e-10 * max(1.0, scale):
        raise NotHermitian(f"||M - M*|| = {asym:.3e}")
    H = (M + adjoint(M)) / 2
    w, Q = np.linalg.eigh(H)
    band = CLAMP_FACTOR * EPS * max(1.0, scale)
    floor = max(band, negative_slack)
    if w.min() < -floor:
        raise NotPSD(f"eigenvalue {w.min():.3e} below clamp band {-floor:.3e}")
    w = np.where(w <= band, 0.0, w)
    S = (Q * np.sqrt(w)) @ adjoint(Q)
    return (S + adjoint(S)) / 2


def _fix_phases(V):
    # largest-magnitude entry of each column made real positive
    if V.size == 0:
        return V
    idx = np.argmax(np.abs(V), axis=0)
    piv = V[idx, np.arange(V.shape[1])]
    return V * (np.abs(piv) / piv)


def range_isometry(M, tol=None):
    """Orthonormal basis (as columns) of the numerical column space of ``M``."""
    M = as_matrix(M)
    tol = resolve_tol(tol)
    if M.size == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    r = tol.rank(s)
    return _fix_phases(U[:, :r].copy())


def numerical_rank(M, tol=None):
    M = as_matrix(M)
    if M.size == 0:
        return 0
    return resolve_tol(tol).rank(np.linalg.svd(M, compute_uv=False))


def orthogonal_complement(V, dim, tol=None):
    """Isometry onto the complement in ``C^dim`` of the span of ``V``'s columns."""
    V = as_matrix(V)
    if dim == 0:
        return np.zeros((0, 0), dtype=complex)
    if V.shape[1] == 0:
        return identity(dim)
    Q = range_isometry(V, tol)
    return range_isometry(identity(dim) - Q @ adjoint(Q), tol)


def pinv(M, tol=None):
    """Moore-Penrose pseudoinverse with small singular values dropped."""
    M = as_matrix(M)
    tol = resolve_tol(tol)
    if M.size == 0:
        return np.zeros((M.shape[1], M.shape[0]), dtype=complex)
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    r = tol.rank(s)
    return (adjoint(Vh[:r]) / s[:r]) @ adjoint(U[:, :r])


def unitarity_residual(W):
    """``max(||W*W - I||, ||WW* - I||)``; ``inf`` for a non-square matrix."""
    W = as_matrix(W)
    if W.shape[0] != W.shape[1]:
        return float("inf")
    n = W.shape[0]
    return max(operator_norm(adjoint(W) @ W - identity(n)),
               operator_norm(W @ adjoint(W) - identity(n)))


def isometry_residual(V):
    V = as_matrix(V)
    return operator_norm(adjoint(V) @ V - identity(V.shape[1]))


def block_diag(*blocks):
    """Direct sum of possibly degenerate blocks."""
    blocks = [as_matrix(b) for b in blocks]
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols), dtype=complex)
    i = j = 0
    for b in blocks:
        out[i:i + b.shape[0], j:j + b.shape[1]] = b
        i += b.shape[0]
        j += b.shape[1]
    return out
