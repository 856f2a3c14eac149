"""Exception types raised by charfact."""


class CharfactError(Exception):
    """Base class for all charfact errors."""


class NotHermitian(CharfactError):
    pass


class NotPSD(CharfactError):
    pass


class DimensionMismatch(CharfactError):
    pass


class NotAContraction(CharfactError):
    """The row operator fails ``sum T_j T_j^* <= I``."""

    def __init__(self, msg, norm=None):
        super().__init__(msg)
        self.norm = norm


class NotContractive(CharfactError):
    """A coupling operator ``L`` has norm larger than one."""

    def __init__(self, msg, norm=None):
        super().__init__(msg)
        self.norm = norm


class NotFactorable(CharfactError):
    """``X`` is not of the form ``D_{A*} L D_B``."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class NotUnitary(CharfactError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class NotPurelyContractive(CharfactError):
    """The product built from ``w`` fixes a vacuum vector.

    ``fprime_dim`` and ``fstarprime_dim`` are the dimensions of the
    parts of ``F`` and ``F_*`` not reached by ``N`` and ``M^*``.
    """

    def __init__(self, msg, fprime_dim=0, fstarprime_dim=0, vacuum_norm=None):
        super().__init__(msg)
        self.fprime_dim = fprime_dim
        self.fstarprime_dim = fstarprime_dim
        self.vacuum_norm = vacuum_norm


class NotCommuting(CharfactError):
    def __init__(self, msg, commutator_norm=None):
        super().__init__(msg)
        self.commutator_norm = commutator_norm


class WordTooLong(CharfactError):
    pass


class OutsideBall(CharfactError):
    pass


class SamplingRestriction(CharfactError):
    """The point violates ``sum |z_i| <= 1/2`` needed for the tail bound."""


class RankDeficiencyWarning(UserWarning):
    """A pseudoinverse dropped directions that the target does not annihilate."""
