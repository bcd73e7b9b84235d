"""Exception hierarchy shared across the package."""


class OrbiteigError(Exception):
    """Base class for all package-specific errors."""


class DomainError(OrbiteigError):
    """An argument lies outside the mathematical domain of an operation."""


class PreconditionError(OrbiteigError):
    """A documented precondition of an operation is violated."""


class ValidationError(OrbiteigError):
    """A value object fails its structural invariants."""


class DegenerateCurveError(PreconditionError):
    """A curve has no usable elements (zero length)."""


class ConvergenceError(OrbiteigError):
    """An iteration failed to converge within its budget.

    ``diagnostics`` carries solver state useful for post-mortems.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class QuadratureError(ConvergenceError):
    """Adaptive quadrature could not reach the requested accuracy."""


class InconclusiveCertificateError(OrbiteigError):
    """A certificate run ended without a decision (refinement cap reached)."""
