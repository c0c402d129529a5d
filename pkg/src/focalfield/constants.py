"""Physical constants (SI) and experiment defaults used across the package."""

from scipy import constants as _sc

HBAR = _sc.hbar
H_PLANCK = _sc.h
KB = _sc.k
AMU = _sc.physical_constants["atomic mass constant"][0]

#: Mass of a single 87Rb atom (kg).
RB87_MASS = 86.909180527 * AMU

#: Default probe wavelength (m), Rb D2 line.
DEFAULT_WAVELENGTH = 780e-9
#: Default focal length of the focusing lens (m).
DEFAULT_FOCAL_LENGTH = 4.5e-3
