"""Exception taxonomy shared across the package.

The CLI maps these onto stable exit codes: configuration problems exit 1,
data problems exit 2, numerical failures exit 3.
"""


class DynhiError(Exception):
    """Base class for all package errors."""


class ConfigError(DynhiError, ValueError):
    """Invalid configuration value or unusable call arguments."""


class DimensionError(DynhiError, ValueError):
    """Array shape mismatch; the message names the offending axis."""


class StateError(DynhiError, RuntimeError):
    """Operation called out of order (e.g. backward without a forward)."""


class DataError(DynhiError, ValueError):
    """Malformed or missing input data; the message names the file."""


class NumericalError(DynhiError, RuntimeError):
    """Training or evaluation produced non-finite values."""


class InsufficientHistoryError(DynhiError, ValueError):
    """A series is too short for the requested window or split."""


class DegenerateSeriesError(DynhiError, ValueError):
    """A series is constant (or rank-deficient) where variation is required."""
