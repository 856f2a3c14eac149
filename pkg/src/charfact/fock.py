"""Words over ``{1..n}`` and the full Fock space truncated at length ``k``.

Basis vectors ``e_alpha`` of ``Gamma_{<=k}`` are ordered graded
lexicographically, vacuum first.  Tensor products ``Gamma_{<=k} (x) E``
use Fock index major, coefficient index minor, i.e. ``np.kron(F, X)``.
Creation operators are compressed to the truncation, so they kill the
top degree and any product of ``k + 1`` of them vanishes.
"""

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np

EMPTY = ()


def parse_word(s):
    """``"121" -> (1, 2, 1)``; the empty string (or ``"0"``/``"e"``) is the empty word."""
    s = s.strip()
    if s in ("", "0", "e", "∅"):
        return EMPTY
    return tuple(int(c) for c in s)


def format_word(word):
    return "".join(str(c) for c in word)


def reverse(word):
    return tuple(reversed(word))


@dataclass(frozen=True)
class FockBasis:
    n: int
    k: int
    words: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1 or self.k < 0:
            raise ValueError("need n >= 1 and k >= 0")
        words = [w for m in range(self.k + 1)
                 for w in product(range(1, self.n + 1), repeat=m)]
        object.__setattr__(self, "words", tuple(words))

    @cached_property
    def index(self):
        return {w: i for i, w in enumerate(self.words)}

    @property
    def dim(self):
        return len(self.words)

    @cached_property
    def degrees(self):
        return np.array([len(w) for w in self.words])

    def degree_mask(self, lo=0, hi=None):
        """Boolean mask of basis words with ``lo <= |w| <= hi``."""
        hi = self.k if hi is None else hi
        d = self.degrees
        return (d >= lo) & (d <= hi)


def enumerate_words(n, k):
    return FockBasis(n, k)


def fock_dim(n, k):
    return k + 1 if n == 1 else (n ** (k + 1) - 1) // (n - 1)


def _shift(basis, j, right):
    if not 1 <= j <= basis.n:
        raise ValueError(f"letter {j} outside 1..{basis.n}")
    M = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col, w in enumerate(basis.words):
        if len(w) < basis.k:
            target = w + (j,) if right else (j,) + w
            M[basis.index[target], col] = 1
    return M


def left_creation(basis, j):
    """``e_alpha -> e_{j alpha}``, zero on the top degree."""
    return _shift(basis, j, right=False)


def right_creation(basis, j):
    """``e_alpha -> e_{alpha j}``, zero on the top degree."""
    return _shift(basis, j, right=True)


def flip(basis):
    """Permutation ``e_alpha -> e_{reverse(alpha)}``."""
    M = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col, w in enumerate(basis.words):
        M[basis.index[reverse(w)], col] = 1
    return M


def word_operator(basis, word, generators):
    """``generators[a_1] @ ... @ generators[a_m]`` (letters are 1-based)."""
    out = np.eye(generators[0].shape[0] if len(generators) else basis.dim, dtype=complex)
    for letter in word:
        out = out @ generators[letter - 1]
    return out


def vacuum_projection(basis):
    P = np.zeros((basis.dim, basis.dim), dtype=complex)
    P[0, 0] = 1
    return P


def degree_projection(basis, lo=0, hi=None):
    return np.diag(basis.degree_mask(lo, hi).astype(complex))


def tensor_shuffle(fock_dim_, n, h):
    """Permutation ``p`` taking ``Gamma (x) (C^n (x) H)`` to ``C^n (x) (Gamma (x) H)``.

    The returned index array satisfies ``y = x[p]`` where ``x`` is ordered
    with Fock index major and ``y`` with tuple index major, so the
    permutation matrix is ``np.eye(N)[p]``.
    """
    D = fock_dim_
    p = np.empty(D * n * h, dtype=int)
    for j in range(n):
        for a in range(D):
            for i in range(h):
                p[j * D * h + a * h + i] = a * n * h + j * h + i
    return p


def permutation_matrix(p):
    return np.eye(len(p), dtype=complex)[p]
