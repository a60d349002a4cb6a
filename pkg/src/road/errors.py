"""Exception hierarchy shared across the package.

Two branches matter operationally: structural input errors (bad shapes,
empty containers, malformed files) and numerical errors (degenerate data,
failed factorizations, infeasible problems).  The CLI maps the former to
exit code 2 and the latter to exit code 3.
"""


class RoadError(Exception):
    """Base class for all package-specific errors."""


class RoadInputError(RoadError):
    """Structurally invalid input (shapes, empty containers, bad values)."""


class RoadNumericalError(RoadError):
    """Numerically degenerate data or a failed computation."""


# -- input errors -------------------------------------------------------

class EmptyInput(RoadInputError):
    """An operation received an empty vector, matrix or dataset."""


class DimensionMismatch(RoadInputError):
    """Operands have incompatible shapes."""


class EmptySubset(RoadInputError):
    """A feature subset argument is empty."""


class EmptyBase(RoadInputError):
    """The base index set for correlation expansion is empty."""


class InvalidRho(RoadInputError):
    """A correlation parameter is outside the positive-definite range."""


class DimensionTooLarge(RoadInputError):
    """Problem size exceeds the exact solver's enumeration budget."""


# -- numerical errors ---------------------------------------------------

class NotPositiveDefinite(RoadNumericalError):
    """A factorization hit a non-positive pivot."""


class ZeroDirection(RoadNumericalError):
    """A projection direction has zero norm."""


class ZeroMeanDifference(RoadNumericalError):
    """The class mean difference vector is identically zero."""


class NonPositiveEigenvalue(RoadNumericalError):
    """An eigenvalue argument is not strictly positive."""


class DegenerateClass(RoadNumericalError):
    """A class has too few samples for the requested statistic."""


class ConstantSample(RoadNumericalError):
    """A sample row is constant and cannot be standardized."""


class DegenerateDirection(RoadNumericalError):
    """The fitted direction has non-positive estimated variance."""


class Infeasible(RoadNumericalError):
    """The constraint set of the exact problem is empty."""
