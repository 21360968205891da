"""Exception types shared across the package.

The CLI maps these onto exit codes, so every stage failure must surface as
one of them rather than a bare Exception.
"""


class AlignmentError(ValueError):
    """Sample identifiers do not line up across inputs."""


class NumericalFailure(ArithmeticError):
    """A numerical routine failed to converge or produced non-finite values."""


class DegenerateInputError(ValueError):
    """Input is structurally valid but carries no usable information
    (empty after filtering, zero variance, no observed events, ...)."""


class DomainError(ValueError):
    """A value lies outside the mathematical domain of a transform."""
