"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage/argument problems -> 1,
data problems -> 2, numerical problems -> 3.
"""


class NethawkesError(Exception):
    """Base class for all package errors."""


class ArgumentError(NethawkesError, ValueError):
    """An operation was called with invalid arguments."""


class DataError(NethawkesError, ValueError):
    """Input data violates a contract (bad file, inconsistent state)."""


class ParseError(DataError):
    """A data file could not be parsed; carries a line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(DataError):
    """Parsed data violates model bounds (time past horizon, bad index)."""


class DegenerateError(DataError):
    """A statistical operation is undefined for this input."""


class NumericalError(NethawkesError, RuntimeError):
    """A numerical routine failed (non-PSD matrix, Cholesky breakdown)."""


class ExplosionError(NumericalError):
    """Simulation exceeded its event cap; parameters are unstable."""
