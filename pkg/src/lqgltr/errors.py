"""Exception hierarchy shared across the toolkit."""


class LqgLtrError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(LqgLtrError):
    """Matrix or system dimensions are incompatible."""


class InvalidParameters(LqgLtrError):
    """A parameter record violates its invariants."""


class NotStable(LqgLtrError):
    """A matrix required to be Hurwitz has an eigenvalue with Re >= 0."""


class NotStabilizable(LqgLtrError):
    """(A, B) has an uncontrollable unstable mode."""


class NotDetectable(LqgLtrError):
    """(C, A) has an unobservable unstable mode."""


class ConvergenceFailure(LqgLtrError):
    """An iterative solver stopped above its residual tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ImproperTransferFunction(LqgLtrError):
    """Numerator degree exceeds denominator degree."""


class AlgebraicLoop(LqgLtrError):
    """A feedback interconnection is not well posed."""


class SingularAtFrequency(LqgLtrError):
    """jw coincides with an eigenvalue of A."""

    def __init__(self, message, omega=None):
        super().__init__(message)
        self.omega = omega


class UnstableSystem(LqgLtrError):
    """An operation that requires a stable system received an unstable one."""


class UnstableClosedLoop(LqgLtrError):
    """The closed loop is internally unstable."""

    def __init__(self, message, eigenvalues=()):
        super().__init__(message)
        self.eigenvalues = tuple(eigenvalues)


class SingularTransformation(LqgLtrError):
    """The bilinear map is singular at the requested sample period."""


class NearSingularGramian(LqgLtrError):
    """A retained Hankel value is numerically zero; truncation refused."""


class NumericalBlowup(LqgLtrError):
    """A simulated state exceeded the divergence threshold."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class UnstableLoop(LqgLtrError):
    """The sampled-data loop to be identified is unstable."""


class InsufficientCycles(LqgLtrError):
    """Fewer than the minimum steady-state cycles would remain."""


class DivergedFilter(LqgLtrError):
    """The parameter filter's covariance grew for most of the run."""


class ConfigError(LqgLtrError):
    """The project configuration failed to parse or validate."""


class MissingDependency(LqgLtrError):
    """A command requires an artifact another command has not produced."""


class ComputationError(LqgLtrError):
    """A pipeline command failed while computing; wraps the inner error."""
