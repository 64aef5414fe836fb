"""Exception hierarchy shared by every module.

The CLI maps each class onto a distinct exit status.
"""


class SysriskError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SysriskError, ValueError):
    """Invalid parameters, detected before any numerical work."""


class DataError(SysriskError, ValueError):
    """Malformed or inconsistent input data."""


class NumericError(SysriskError, ArithmeticError):
    """A computation could not produce a meaningful result."""
