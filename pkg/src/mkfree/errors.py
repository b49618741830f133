"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ValidationError -> 2,
NumericalError -> 3, OSError/JSON parse problems -> 4.
"""


class MkfreeError(Exception):
    """Base class for all package errors."""


class ValidationError(MkfreeError):
    """Model or modification data violates an invariant."""


class ParseError(MkfreeError):
    """An input file could not be read as JSON (treated as an I/O problem)."""


class NumericalError(MkfreeError):
    """A numerical procedure broke down (conditioning, singularity, ...)."""


class SupportDeficiencyError(NumericalError):
    """Too few nodes inside a support domain, even after radius growth."""

    def __init__(self, msg, point=None, found=None, needed=None):
        super().__init__(msg)
        self.point = point
        self.found = found
        self.needed = needed


class ConditioningError(NumericalError):
    """A correlation or polynomial system is numerically singular."""

    def __init__(self, msg, cond_estimate=None):
        super().__init__(msg)
        self.cond_estimate = cond_estimate


class RigidBodyError(NumericalError):
    """Stiffness matrix is not positive definite: insufficient constraints."""

    def __init__(self, msg, null_vector=None):
        super().__init__(msg)
        self.null_vector = null_vector
