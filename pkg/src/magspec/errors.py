"""Exception hierarchy shared by all modules."""


class MagspecError(Exception):
    """Base class for all library errors."""


class DomainError(MagspecError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularityError(MagspecError, ValueError):
    """Evaluation requested at a singular point."""


class ResolutionError(MagspecError):
    """The discretization is too coarse to resolve the requested feature."""


class ConvergenceError(MagspecError):
    """A refinement or tail-summation loop did not converge."""


class DivergenceError(MagspecError):
    """An integral that should be finite diverges."""


class AdmissibilityError(MagspecError, ValueError):
    """A potential is outside the admissible class of a bound."""


class PreconditionError(MagspecError, ValueError):
    """A documented precondition does not hold."""


class ConfigError(MagspecError, ValueError):
    """Invalid run configuration; ``path`` names the offending key."""

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
