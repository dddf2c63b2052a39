"""Exception hierarchy shared by every stage of the toolkit.

The CLI maps these onto exit codes: validation problems exit 1, I/O
failures (plain ``OSError``) exit 2, numeric failures exit 3.
"""


class LandMCDAError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(LandMCDAError, ValueError):
    """Input data or configuration violates a documented contract."""


class GridFormatError(ValidationError):
    """An ASCII grid could not be parsed."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class AlignmentError(ValidationError):
    """Rasters do not share the same grid geometry."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(message)


class NumericError(LandMCDAError, ArithmeticError):
    """A numerical procedure failed or produced an unusable result."""


class DegenerateOrdinationError(NumericError):
    """GOOD and BAD reference points coincide after ordination."""


class ConvergenceError(NumericError):
    """An iterative method did not converge within its budget."""


class ConsistencyError(NumericError):
    """An AHP judgment matrix exceeds the consistency-ratio threshold."""
