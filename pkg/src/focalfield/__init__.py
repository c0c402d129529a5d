"""Strongly focused Gaussian beams and single-atom extinction."""

__version__ = "0.1.0"

from .core import ComplexField3, CylPoint, OpticalConfig  # noqa: E402
from .errors import (ConfigError, ConvergenceError, CoverageError, FocalFieldError,  # noqa: E402
                     InterpolationError, InvalidInputError, NoSolutionError, SingularPointError)
from .quadrature import QuadratureSpec  # noqa: E402
from .scattering import ExtinctionGrid, extinction_pipeline_oracle, extinction_point  # noqa: E402
from .thermal import HeatingParams, TrapConfig  # noqa: E402

__all__ = [
    "ComplexField3", "ConfigError", "ConvergenceError", "CoverageError", "CylPoint",
    "ExtinctionGrid", "FocalFieldError", "HeatingParams", "InterpolationError",
    "InvalidInputError", "NoSolutionError", "OpticalConfig", "QuadratureSpec",
    "SingularPointError", "TrapConfig", "extinction_pipeline_oracle", "extinction_point",
]
