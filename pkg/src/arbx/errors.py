"""Exception types shared across the package.

The CLI maps these onto single-line machine-readable error categories,
so keep the class names stable.
"""


class ArbxError(Exception):
    """Base class for all library errors."""


class ConfigError(ArbxError, ValueError):
    """Invalid parameter combination or configuration file."""


class DimensionError(ArbxError, ValueError):
    """Grid or coefficient shapes do not match."""


class ModelError(ArbxError, RuntimeError):
    """A model construction or sampling step failed (non-PSD, non-stationary...)."""


class TruncationError(ArbxError, RuntimeError):
    """Requested truncation level has no positive empirical eigenvalue."""


class DegenerateGapError(ArbxError, ValueError):
    """Tied eigenvalues: spectral-gap coefficients are undefined."""


class IngestionError(ArbxError, ValueError):
    """Malformed station CSV input."""


class ExperimentError(ArbxError, RuntimeError):
    """A Monte Carlo experiment could not produce a valid table."""
