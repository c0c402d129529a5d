"""Exception types raised by focalfield."""


class FocalFieldError(Exception):
    """Base class for all package errors."""


class InvalidInputError(FocalFieldError, ValueError):
    """An argument violates the documented preconditions."""


class SingularPointError(InvalidInputError):
    """Evaluation requested at a singular point of a field."""


class ConvergenceError(FocalFieldError, RuntimeError):
    """Adaptive quadrature hit its refinement limit.

    Attributes
    ----------
    estimates : tuple
        The last two estimates produced before giving up.
    """

    def __init__(self, message, estimates=(None, None)):
        super().__init__(message)
        self.estimates = tuple(estimates)


class CoverageError(FocalFieldError, ValueError):
    """An extinction grid does not cover the thermal cloud."""


class InterpolationError(FocalFieldError, RuntimeError):
    """Bilinear interpolation of a grid misses the validation tolerance."""


class NoSolutionError(FocalFieldError, ValueError):
    """A temperature fit target lies outside the achievable range."""


class ConfigError(FocalFieldError, ValueError):
    """A run configuration could not be parsed or validated."""
