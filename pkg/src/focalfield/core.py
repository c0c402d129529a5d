"""Geometry, field containers, the input Gaussian beam and the ideal lens.

Coordinates: the focusing lens is the plane ``z = 0``; light travels towards
``+z`` and is focused at ``z = f``.  A collecting lens of the same focal
length sits at ``z = 2f`` (confocal arrangement).

Scalar operations take and return :class:`ComplexField3`; the ``*_array``
variants work on ``(3, ...)`` complex arrays and are what the integrators use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import DEFAULT_FOCAL_LENGTH, DEFAULT_WAVELENGTH
from .errors import InvalidInputError

TWO_PI = 2.0 * math.pi
X_HAT = (1.0, 0.0, 0.0)


@dataclass(frozen=True)
class ComplexField3:
    """Complex amplitude of an electric field at one point (V/m per component)."""

    ex: complex
    ey: complex
    ez: complex

    def __post_init__(self):
        for name in ("ex", "ey", "ez"):
            value = complex(getattr(self, name))
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise InvalidInputError(f"field component {name} is not finite: {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, values) -> "ComplexField3":
        values = np.asarray(values, dtype=complex)
        if values.shape != (3,):
            raise InvalidInputError(f"expected 3 components, got shape {values.shape}")
        return cls(values[0], values[1], values[2])

    @classmethod
    def zero(cls) -> "ComplexField3":
        return cls(0j, 0j, 0j)

    def as_array(self) -> np.ndarray:
        return np.array([self.ex, self.ey, self.ez], dtype=complex)

    def norm2(self) -> float:
        """Squared modulus ``|E|^2``."""
        return float(np.sum(np.abs(self.as_array()) ** 2))

    def dot(self, vector) -> complex:
        """Bilinear projection ``v . E`` onto a (real) direction."""
        return complex(np.dot(np.asarray(vector, dtype=float), self.as_array()))

    def __add__(self, other: "ComplexField3") -> "ComplexField3":
        return ComplexField3.from_array(self.as_array() + other.as_array())

    def __sub__(self, other: "ComplexField3") -> "ComplexField3":
        return ComplexField3.from_array(self.as_array() - other.as_array())

    def __mul__(self, scalar) -> "ComplexField3":
        return ComplexField3.from_array(self.as_array() * complex(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class OpticalConfig:
    """Focusing optics and the input beam.

    Parameters
    ----------
    wavelength : float
        Probe wavelength (m).
    focal_length : float
        Focal length of both lenses (m).
    beam_waist : float
        1/e field radius ``w_L`` of the collimated input beam (m).
    aperture_radius : float, optional
        Hard aperture of the lenses (m).  Defaults to ``5 * beam_waist``.
    input_amplitude : float
        Peak field ``E_L`` of the input beam (V/m).
    """

    wavelength: float = DEFAULT_WAVELENGTH
    focal_length: float = DEFAULT_FOCAL_LENGTH
    beam_waist: float = 0.29 * DEFAULT_FOCAL_LENGTH
    aperture_radius: float | None = None
    input_amplitude: float = 1.0

    def __post_init__(self):
        if self.aperture_radius is None:
            object.__setattr__(self, "aperture_radius", 5.0 * self.beam_waist)
        for name in ("wavelength", "focal_length", "beam_waist", "aperture_radius"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidInputError(f"{name} must be positive and finite, got {value}")
        if not math.isfinite(self.input_amplitude):
            raise InvalidInputError("input_amplitude must be finite")

    @classmethod
    def from_focusing(cls, u: float, wavelength: float = DEFAULT_WAVELENGTH,
                      focal_length: float = DEFAULT_FOCAL_LENGTH, **kwargs) -> "OpticalConfig":
        """Build a configuration from the focusing parameter ``u = w_L / f``."""
        if not u > 0:
            raise InvalidInputError(f"focusing parameter must be positive, got {u}")
        return cls(wavelength=wavelength, focal_length=focal_length,
                   beam_waist=u * focal_length, **kwargs)

    @property
    def k(self) -> float:
        """Wavenumber (rad/m)."""
        return TWO_PI / self.wavelength

    @property
    def u(self) -> float:
        """Focusing parameter ``w_L / f``."""
        return self.beam_waist / self.focal_length

    @property
    def radial_cutoff(self) -> float:
        """Outer radius of all lens-plane integrals."""
        return min(self.aperture_radius, 5.0 * self.beam_waist)

    def replace(self, **changes) -> "OpticalConfig":
        values = {name: getattr(self, name) for name in
                  ("wavelength", "focal_length", "beam_waist", "input_amplitude")}
        values["aperture_radius"] = self.aperture_radius
        if "beam_waist" in changes and "aperture_radius" not in changes:
            values["aperture_radius"] = None
        values.update(changes)
        return OpticalConfig(**values)


@dataclass(frozen=True)
class CylPoint:
    """Point in cylindrical coordinates; ``phi`` is normalized to ``[0, 2pi)``."""

    rho: float
    phi: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        if not (self.rho >= 0 and math.isfinite(self.rho)):
            raise InvalidInputError(f"rho must be >= 0, got {self.rho}")
        phi = math.fmod(self.phi, TWO_PI)
        if phi < 0:
            phi += TWO_PI
        if phi >= TWO_PI:
            phi = 0.0
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_cartesian(cls, x: float, y: float, z: float) -> "CylPoint":
        return cls(math.hypot(x, y), math.atan2(y, x), z)

    @property
    def cartesian(self) -> np.ndarray:
        return np.array([self.rho * math.cos(self.phi), self.rho * math.sin(self.phi), self.z])


def _check_polarization(polarization) -> np.ndarray:
    pol = np.asarray(polarization, dtype=float)
    if pol.shape != (3,):
        raise InvalidInputError("polarization must be a 3-vector")
    if abs(np.linalg.norm(pol) - 1.0) > 1e-12:
        raise InvalidInputError(f"polarization must have unit norm, got {np.linalg.norm(pol)}")
    if abs(pol[2]) > 1e-12:
        raise InvalidInputError("input polarization must be transverse (zero z-component)")
    return pol


def lens_cos_theta(rho, f):
    """Cosine of the ray bending angle at radius ``rho`` for a lens focusing at ``f``."""
    return f / np.sqrt(np.square(rho) + f * f)


def gaussian_profile(rho, cfg: OpticalConfig):
    """Scalar input amplitude ``E_L exp(-rho^2 / w_L^2)``."""
    return cfg.input_amplitude * np.exp(-np.square(rho) / cfg.beam_waist ** 2)


def gaussian_input_field(p: CylPoint, cfg: OpticalConfig, polarization=X_HAT) -> ComplexField3:
    """Collimated Gaussian beam just before the focusing lens."""
    pol = _check_polarization(polarization)
    return ComplexField3.from_array(pol * gaussian_profile(p.rho, cfg))


def rotation_matrices(rho, phi, f) -> np.ndarray:
    """Vectorized ``R_z(phi) R_y(theta) R_z(-phi)``; returns shape ``(3, 3, ...)``."""
    rho = np.asarray(rho, dtype=float)
    phi = np.asarray(phi, dtype=float)
    rho, phi = np.broadcast_arrays(rho, phi)
    s = np.sqrt(rho * rho + f * f)
    c = f / s
    sn = rho / s
    cp = np.cos(phi)
    sp = np.sin(phi)
    one_c = 1.0 - c
    # closed form of the product, axis n = (-sin phi, cos phi, 0)
    m = np.empty((3, 3) + rho.shape)
    m[0, 0] = c * cp * cp + sp * sp
    m[0, 1] = -one_c * cp * sp
    m[0, 2] = -sn * cp
    m[1, 0] = m[0, 1]
    m[1, 1] = c * sp * sp + cp * cp
    m[1, 2] = -sn * sp
    m[2, 0] = sn * cp
    m[2, 1] = sn * sp
    m[2, 2] = c
    return m


def rotation_matrix_U(rho: float, phi: float, f: float) -> np.ndarray:
    """Polarization rotation applied by the lens at ``(rho, phi)``.

    Maps ``z`` onto the direction of the ray leaving the lens towards the
    focus; ``theta`` satisfies ``cos(theta) = f / sqrt(f^2 + rho^2)``.
    """
    if rho < 0 or f <= 0:
        raise InvalidInputError("rotation_matrix_U requires rho >= 0 and f > 0")
    return rotation_matrices(rho, phi, f)


def lens_transform_array(field_in, rho, phi, cfg: OpticalConfig) -> np.ndarray:
    """Apply the focusing lens to a ``(3, ...)`` field sampled at ``(rho, phi)``."""
    rho = np.asarray(rho, dtype=float)
    f = cfg.focal_length
    s = np.sqrt(rho * rho + f * f)
    factor = np.exp(-1j * cfg.k * (s - f)) / np.sqrt(f / s)
    factor = np.where(rho <= cfg.aperture_radius, factor, 0.0)
    u = rotation_matrices(rho, phi, f)
    return np.einsum("ij...,j...->i...", u, field_in) * factor


def collection_transform_array(field_in, rho, phi, cfg: OpticalConfig) -> np.ndarray:
    """Collimating lens at ``z = 2f``: the inverse of the focusing transform.

    A ray diverging from the focus through ``(rho, phi)`` is turned back onto
    the optical axis by the same rotation ``U(rho, phi)``; the amplitude picks
    up ``sqrt(cos(theta))`` instead of its inverse.
    """
    rho = np.asarray(rho, dtype=float)
    f = cfg.focal_length
    s = np.sqrt(rho * rho + f * f)
    factor = np.exp(-1j * cfg.k * (s - f)) * np.sqrt(f / s)
    factor = np.where(rho <= cfg.aperture_radius, factor, 0.0)
    u = rotation_matrices(rho, phi, f)
    return np.einsum("ij...,j...->i...", u, field_in) * factor


def apply_lens(field_in: ComplexField3, p: CylPoint, cfg: OpticalConfig) -> ComplexField3:
    """Ideal lens: ``(1/sqrt(cos theta)) U exp(-ik(sqrt(rho^2+f^2) - f))``.

    Points outside the aperture are blocked (zero field).
    """
    if p.rho > cfg.aperture_radius:
        return ComplexField3.zero()
    out = lens_transform_array(field_in.as_array(), p.rho, p.phi, cfg)
    return ComplexField3.from_array(out)


def lens_field_array(rho, phi, cfg: OpticalConfig, polarization=X_HAT) -> np.ndarray:
    """Gaussian input already transformed by the focusing lens, shape ``(3, ...)``."""
    pol = _check_polarization(polarization)
    rho, phi = np.broadcast_arrays(np.asarray(rho, dtype=float), np.asarray(phi, dtype=float))
    amp = gaussian_profile(rho, cfg)
    field_in = pol.reshape((3,) + (1,) * rho.ndim) * amp
    return lens_transform_array(field_in, rho, phi, cfg)
