"""Exception hierarchy."""


class PhaseSegError(Exception):
    """Base class for every error raised by the package."""


class InvalidParameterError(PhaseSegError, ValueError):
    pass


class DomainError(PhaseSegError, ValueError):
    """A function was evaluated outside its domain."""

    def __init__(self, message, condition=None, index=None):
        super().__init__(message)
        self.condition = condition
        self.index = index


class ShapeError(PhaseSegError, ValueError):
    pass


class ValidationError(PhaseSegError, ValueError):
    """Model or initial data violate a structural condition."""

    def __init__(self, message, condition=None, index=None):
        super().__init__(message)
        self.condition = condition
        self.index = index


class SolverFailure(PhaseSegError, RuntimeError):
    """Scalar root finder did not converge within its iteration cap."""

    def __init__(self, message, last_iterate=None, residual=None, index=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
        self.index = index


class SingularityError(PhaseSegError, ArithmeticError):
    pass


class NonConvergenceError(PhaseSegError, RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class StepSizeError(PhaseSegError, RuntimeError):
    """The mu-update coefficient is not positive; the time step must shrink."""

    def __init__(self, message, margin=None, index=None):
        super().__init__(message)
        self.margin = margin
        self.index = index


class ConfigError(PhaseSegError, ValueError):
    def __init__(self, message, line=None, key=None):
        super().__init__(message)
        self.line = line
        self.key = key
