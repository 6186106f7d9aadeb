"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: invalid input and file
problems are data errors (exit 2), numerical breakdowns are exit 3.
"""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite or otherwise unusable values."""


class ProblemFileError(InvalidInputError):
    """A problem/placement file failed to parse or validate."""


class ProjectionError(InvalidInputError):
    """A point cannot be projected (e.g. it lies behind the camera)."""


class UndefinedCorrelationError(InvalidInputError):
    """Correlation requested on data with zero variance."""
