"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, so raising the right class
matters more than the message text.
"""


class CatebenchError(Exception):
    """Base class for all package errors."""


class ConfigError(CatebenchError):
    """Invalid run configuration: bad flags, filters, budgets, overrides."""


class ValidationError(CatebenchError):
    """Malformed or inconsistent input data (files, headers, codings, shapes)."""


class CalibrationError(CatebenchError):
    """Degenerate inputs to a calibration step (zero variance, b = 0, ...)."""


class VerificationFailure(CatebenchError):
    """A Monte Carlo verification check missed its tolerance."""
