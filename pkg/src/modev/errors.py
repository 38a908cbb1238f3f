"""Exception and warning types shared across the package.

Errors are semantic: callers can distinguish a bad parameter value
(DomainError) from a numerical failure (QuadratureError) or a budget
problem (BudgetError) without parsing messages.
"""


class ModevError(Exception):
    """Base class for all package errors."""


class DomainError(ModevError):
    """Parameter outside the open parameter box."""


class SupportError(ModevError):
    """Observation outside the family's support."""


class RankError(ModevError):
    """Fisher information numerically rank deficient."""


class QuadratureError(ModevError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class DivergenceError(ModevError):
    """Integrand detected as non-integrable."""


class GridError(ModevError):
    """Evaluation grid violates a precondition (span, step, or emptiness)."""


class MonotoneError(ModevError):
    """Loss table fails monotonicity or l1(0) != 0."""


class DimensionError(ModevError):
    """Operation not supported in this parameter dimension."""


class UnderflowError_(ModevError):
    """All posterior weights underflowed to -inf."""


class TiltDomainError(ModevError):
    """Tilted sampling parameter falls outside the parameter box."""


class BudgetError(ModevError):
    """Requested estimate cannot be resolved within the sampling budget."""


class ConfigError(ModevError):
    """Invalid experiment configuration; message names the offending key."""


class EmptyDirError(ModevError):
    """Report requested on a directory with no results."""


class BoundaryWarning(UserWarning):
    """Maximizer within tolerance of the parameter box boundary."""


class NonDifferentiableWarning(UserWarning):
    """Gradient only defined almost everywhere; a.e. value used."""


class ResolutionWarning(UserWarning):
    """Region boundary cuts a non-negligible share of grid cells."""


class DegenerateWeightsWarning(UserWarning):
    """Importance weights concentrate on very few replications."""
