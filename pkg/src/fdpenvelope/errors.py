"""Exception types shared across the package.

The CLI maps these onto exit codes (config 2, data 3, feasibility 4).
"""


class FdpEnvelopeError(Exception):
    """Base class for all package errors."""


class ConfigError(FdpEnvelopeError):
    """Invalid or inconsistent configuration (bad alpha, unknown family, ...)."""


class DataError(FdpEnvelopeError):
    """Malformed input data (ragged CSV, p-values outside [0, 1], ...)."""


class FeasibilityError(FdpEnvelopeError):
    """Exact computation would exceed a configured enumeration cap."""
