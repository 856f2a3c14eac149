"""Characteristic functions of row contractions and their factorizations.

Everything lives on finite-dimensional spaces: the Fock space is cut at a
word length ``k``, and because the creation operators are nilpotent there
every identity between multi-analytic operators is checked exactly rather
than in a limit.
"""

__version__ = "0.1.0"

from .matkit import RankTolerance, operator_norm, pinv, psd_sqrt, range_isometry
from .rowcon import (
    DefectData,
    RowOperator,
    UpperTriangularPair,
    assemble_T,
    defects,
    extract_L,
    is_commuting,
    is_row_contraction,
    random_commuting_pair,
    random_pair,
    random_row_contraction,
)
from .fock import FockBasis, enumerate_words, flip, left_creation, right_creation, word_operator
from .charfun import (
    TruncatedMultiAnalytic,
    char_fun,
    is_multi_analytic,
    is_purely_contractive,
    symbol_coefficient,
    verify_lemma_identities,
)
from .factorize import (
    converse_build,
    decompose_w,
    defect_unitaries,
    factorization_rhs,
    julia_halmos,
    verify_coincidence,
    verify_factorization,
)
from .constrained import (
    constrained_char_fun,
    series_vs_point,
    symmetric_basis,
    theta_point,
    verify_constrained_factorization,
    verify_invariance,
)
