"""Exception hierarchy. CLI exit codes key off these classes."""


class DexfragError(Exception):
    """Base class for all package errors."""


class ParameterError(DexfragError, ValueError):
    """A value lies outside the domain of the model."""


class SubadditivityError(ParameterError):
    """Cost function violates C(2x) < 2 C(x), giving negative savings."""


class ConfigError(DexfragError, ValueError):
    """Invalid experiment or cluster configuration."""

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


class DegenerateVarianceError(ParameterError):
    """Statistic undefined because the input has zero variance."""


class SingularDesignError(DexfragError, ArithmeticError):
    """Regression design matrix is not of full column rank."""


class CoverageError(DexfragError, ValueError):
    """A sweep table does not cover the full parameter grid."""


class ManifestError(DexfragError, OSError):
    """A file listed in a manifest is missing."""
