"""Exception types shared across the package.

The CLI maps each family onto a distinct exit status.
"""


class RvfError(Exception):
    """Base class for package errors."""


class FormatError(RvfError):
    """An image file is malformed or uses an unsupported encoding."""


class ConfigError(RvfError, ValueError):
    """Invalid measure id, parameter string, probability, or flag."""


class NumericError(RvfError, ArithmeticError):
    """A computation produced NaN or another unusable value."""


class UndefinedMetricError(NumericError):
    """A quality metric is undefined for the given inputs (e.g. zero denominator)."""
