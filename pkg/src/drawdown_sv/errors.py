class DrawdownSVError(Exception):
    """Base class for errors raised by this package."""


class DomainError(DrawdownSVError, ValueError):
    """An argument lies outside the domain of a model function."""


class ConfigurationError(DrawdownSVError, ValueError):
    pass


class GridMismatchError(DrawdownSVError, ValueError):
    pass


class SolverError(DrawdownSVError, RuntimeError):
    """A time march produced non-finite or sign-violating values."""


class InternalConsistencyError(DrawdownSVError, RuntimeError):
    pass


class SimulationError(DrawdownSVError, RuntimeError):
    pass


class StabilityWarning(UserWarning):
    pass
