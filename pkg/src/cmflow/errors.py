"""Exception types raised by cmflow."""


class CmflowError(Exception):
    """Base class for all library errors."""


class DomainError(CmflowError, ValueError):
    """An argument lies outside the domain of the requested quantity."""


class UnsupportedDimensionError(CmflowError, ValueError):
    """Kernel or ambient dimension outside the implemented range."""


class QuadratureError(CmflowError, RuntimeError):
    """Adaptive integration failed to reach the requested tolerance."""


class UnsupportedPairError(CmflowError, ValueError):
    """Operation not available for this combination of points or spaces."""


class CoincidentPointsError(DomainError):
    """Distance-function derivatives requested at the center itself."""


class DegenerateGeometryError(CmflowError, ValueError):
    """A discretized submanifold has collapsed segments or invalid data."""


class SelfIntersectionError(CmflowError, RuntimeError):
    """A discrete flow left the embedded regime."""

    def __init__(self, message, time=None, state=None):
        super().__init__(message)
        self.time = time
        self.state = state


class InsufficientCheckpointsError(CmflowError, ValueError):
    """Too few trace states to extrapolate a limit."""
