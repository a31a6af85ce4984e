"""Exception types shared across the package."""


class RelwaveError(Exception):
    """Base class for all package-specific errors."""


class DomainError(RelwaveError):
    """A point, separation or index lies outside the grid it must live on."""


class SingularMetricError(RelwaveError):
    """A metric component is too close to zero to invert."""


class ConfigurationError(RelwaveError):
    """Invalid run configuration (bad key, missing key, CFL violation, ...)."""


class UnsupportedCarrierError(RelwaveError):
    """The phase-space carrier cannot support the requested operation."""


class IntegrationError(RelwaveError):
    """A quadrature could not be performed (non-normalizable integrand)."""


class AccuracyError(RelwaveError):
    """A quadrature error estimate exceeded the requested tolerance."""


class InconsistentDensityError(RelwaveError):
    """A quantity that must be real came out with a large imaginary part."""


class InstabilityError(RelwaveError):
    """Time evolution produced non-finite values."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite field values at step {step}")


class DegenerateFieldError(RelwaveError):
    """A field is zero (below the node threshold) everywhere."""


class NonConvergenceError(RelwaveError):
    """An iterative solve diverged; carries the iteration trace."""

    def __init__(self, message: str, trace=None):
        self.trace = trace or []
        super().__init__(message)


class BoundaryConditionError(RelwaveError):
    """Source data incompatible with the boundary condition of a solve."""


class BranchMismatchWarning(UserWarning):
    """Probability density has mixed signs beyond tolerance on the chosen branch."""
