"""Exception types raised by mercer_kit."""


class MercerKitError(Exception):
    """Base class for all library errors."""


class InvalidArgument(MercerKitError, ValueError):
    pass


class ResolutionError(MercerKitError):
    """A grid or FFT size is too coarse for the requested object."""


class NumericalFailure(MercerKitError):
    def __init__(self, message, attempts=0):
        super().__init__(message)
        self.attempts = attempts


class NotRegularValue(MercerKitError):
    """``I - lam*T`` is singular or too ill-conditioned to invert."""

    def __init__(self, message, smallest_singular_value):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value


class UnsupportedInput(MercerKitError):
    pass


class PlanInfeasible(MercerKitError):
    def __init__(self, message, minimal_budget):
        super().__init__(message)
        self.minimal_budget = minimal_budget


class InternalError(MercerKitError):
    pass


class CertificateError(MercerKitError):
    """A computed residual exceeded its tolerance."""

    def __init__(self, name, residual, tol):
        super().__init__(f"certificate '{name}' failed: residual {residual:.3e} > tol {tol:.3e}")
        self.name = name
        self.residual = residual
        self.tol = tol
