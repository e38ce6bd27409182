"""Exception hierarchy.

The CLI maps these onto exit codes: input problems exit with 2, numerical
failures with 3.
"""


class MajoranaError(Exception):
    """Base class for all library errors."""


class InvalidInputError(MajoranaError, ValueError):
    """Malformed or out-of-domain input."""


class SizeCapError(InvalidInputError):
    """Star count exceeds the supported maximum."""


class NumericFailureError(MajoranaError, ArithmeticError):
    """An iterative numerical routine failed to reach its accuracy target."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SamplingTooCoarseError(NumericFailureError):
    """Consecutive samples are too far apart; the caller must refine."""


class DegenerateGeometryError(NumericFailureError):
    """A pair frame is degenerate where its weight does not vanish."""


class InternalConsistencyError(NumericFailureError):
    """Two routes to the same quantity disagree."""
