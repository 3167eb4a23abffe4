"""Exception types raised by the numerical routines."""


class TsdError(Exception):
    """Base class for all package errors."""


class DomainError(TsdError, ValueError):
    """An argument lies outside the domain of an operation (e.g. u = 0)."""


class QuadratureError(TsdError):
    """Adaptive quadrature did not reach the requested accuracy.

    ``estimate`` and ``error`` carry the best value reached and its error bound.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class InversionError(QuadratureError):
    """Characteristic-function inversion failed to converge."""


class DivergenceError(TsdError, ArithmeticError):
    """The requested integral is infinite."""


class SamplingError(TsdError):
    """A sampler cannot produce variates for the given parameters."""
