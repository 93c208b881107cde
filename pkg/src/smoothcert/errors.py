"""Exception types shared across the package."""


class SmoothcertError(Exception):
    """Base class for all package errors."""


class ParameterError(SmoothcertError, ValueError):
    """An argument is outside its documented domain."""


class NumericsError(SmoothcertError):
    """An internal numeric routine failed to converge to its tolerance."""


class UnsupportedGeneratorError(SmoothcertError):
    """A noise generator id names an algorithm this build does not implement."""


class UnsupportedOracleError(SmoothcertError):
    """No closed-form smoothing oracle exists for this classifier kind."""


class TransportError(SmoothcertError):
    """An external classifier connection failed; carries the protocol diagnostic."""


class CacheError(SmoothcertError):
    """Base class for certification-cache problems."""


class CacheFormatError(CacheError):
    """Cache file is corrupt (bad magic, truncated, inconsistent lengths)."""


class CacheVersionError(CacheError):
    """Cache file uses a format version this build does not read."""


class CacheCompatibilityError(CacheError):
    """Cache contents cannot be reused (generator, sigma, or input mismatch)."""


class PlanningError(SmoothcertError):
    """Sample planning target is unreachable."""
