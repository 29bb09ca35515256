"""Exception hierarchy shared by all loadtune modules."""


class LoadtuneError(Exception):
    """Base class for all errors raised by this package."""


class ZeroLeadingDenominator(LoadtuneError):
    """Denominator has a zero leading coefficient; operator cannot be realized."""


class NonInvertible(LoadtuneError):
    """Attempted to invert an operator whose numerator is identically zero."""


class DegenerateLoop(LoadtuneError):
    """1 + G*C is identically zero; the feedback loop is ill-posed."""


class BadPeriod(LoadtuneError):
    """Square-wave period must be at least 2 samples."""


class TooFewSamples(LoadtuneError):
    """Not enough samples for the requested operation."""


class DimensionMismatch(LoadtuneError):
    """Series or matrix dimensions are inconsistent."""


class IllConditioned(LoadtuneError):
    """Normal equations are too ill-conditioned to solve reliably."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class NonFiniteCost(LoadtuneError):
    """Cost function returned a non-finite value at the starting point."""


class GridMismatch(LoadtuneError):
    """Spectral estimates are not defined on a common frequency grid."""


class ConfigError(LoadtuneError):
    """Invalid or inconsistent job configuration."""


class ParseError(LoadtuneError):
    """Malformed dataset file."""
