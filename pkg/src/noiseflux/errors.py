"""Exception types shared across the package."""


class NoiseFluxError(Exception):
    """Base class for all package errors."""


class ConfigError(NoiseFluxError, ValueError):
    """Invalid configuration or usage; carries the offending key when known."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class DomainError(NoiseFluxError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(NoiseFluxError, ValueError):
    """Argument outside a tabulated or discretized range."""


class QuadratureError(NoiseFluxError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, *, a=None, b=None, estimate=None, delta=None, levels=None):
        super().__init__(message)
        self.a = a
        self.b = b
        self.estimate = estimate
        self.delta = delta
        self.levels = levels


class BoundaryLeakError(NoiseFluxError, RuntimeError):
    """Wavefunction amplitude reached the edge of a periodic spectral grid."""
