"""Vector propagation of a planar field into the forward half-space.

The field at ``r`` is the far-field dyadic Green's-function integral over
the source plane ``S``::

    E(r) = int_S dS' (ik) exp(ikR) / (2 pi R) M E(r'),

    M = [[-z/R,      0,          0],
         [0,         -z/R,       0],
         [(x'-x)/R,  (y'-y)/R,   0]]

with ``R = |r - r'|`` and ``z`` measured from the source plane.  Terms of
order ``1/(kR)`` are dropped, so the result is valid for ``kR >> 1``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .core import X_HAT, ComplexField3, CylPoint, OpticalConfig, lens_field_array
from .errors import InvalidInputError
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_2d_polar, phase_variation

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PlanarField:
    """A vector field known on the plane ``z = plane_z`` for ``rho <= rho_max``.

    ``field(rho, phi)`` returns a ``(3, ...)`` complex array broadcast over
    its arguments.  ``eikonal(rho)``, when given, is the radial phase of the
    field in radians; it only steers quadrature refinement.
    """

    plane_z: float
    field: Callable
    rho_max: float
    eikonal: Optional[Callable] = None
    samples: Optional[tuple] = None

    def __call__(self, rho, phi) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        values = np.asarray(self.field(rho, phi), dtype=complex)
        return np.where(rho <= self.rho_max, values, 0.0)

    @classmethod
    def from_samples(cls, plane_z: float, rho_axis, phi_axis, values) -> "PlanarField":
        """Sampled field on a ``(rho, phi)`` tensor grid, linearly interpolated.

        ``values`` has shape ``(3, n_rho, n_phi)``; ``phi_axis`` must be
        increasing within ``[0, 2pi)`` and is wrapped periodically.
        """
        rho_axis = np.asarray(rho_axis, dtype=float)
        phi_axis = np.asarray(phi_axis, dtype=float)
        values = np.asarray(values, dtype=complex)
        phi_ext = np.concatenate([phi_axis, [phi_axis[0] + TWO_PI]])
        ext = np.concatenate([values, values[:, :, :1]], axis=2)
        if rho_axis.size > 1 and phi_ext.size > 1:
            interps = [RegularGridInterpolator((rho_axis, phi_ext), comp, bounds_error=False,
                                               fill_value=0.0) for comp in ext]
        else:
            interps = None

        def field(rho, phi):
            rho, phi = np.broadcast_arrays(np.asarray(rho, float), np.mod(phi, TWO_PI))
            if interps is None:
                return np.broadcast_to(values[:, :1, :1], (3,) + rho.shape).reshape((3,) + rho.shape)
            pts = np.stack([rho.ravel(), phi.ravel()], axis=-1)
            return np.stack([it(pts).reshape(rho.shape) for it in interps])

        return cls(plane_z=plane_z, field=field, rho_max=float(rho_axis[-1]),
                   samples=(rho_axis, phi_axis, values))


def focused_source(cfg: OpticalConfig, polarization=X_HAT) -> PlanarField:
    """The Gaussian input just after the focusing lens (plane ``z = 0+``)."""
    k = cfg.k
    f = cfg.focal_length
    return PlanarField(
        plane_z=0.0,
        field=lambda rho, phi: lens_field_array(rho, phi, cfg, polarization),
        rho_max=cfg.radial_cutoff,
        eikonal=lambda rho: -k * (np.sqrt(rho * rho + f * f) - f),
    )


def _green_integrand(src: PlanarField, x, y, dz, k):
    def integrand(rho, phi):
        xs = rho * np.cos(phi)
        ys = rho * np.sin(phi)
        dx = xs - x
        dy = ys - y
        r = np.sqrt(dx * dx + dy * dy + dz * dz)
        e = src(rho, phi)
        kern = (1j * k / TWO_PI) * np.exp(1j * k * r) / (r * r) * rho
        out = np.empty((3,) + np.broadcast_shapes(rho.shape, phi.shape), dtype=complex)
        out[0] = -dz * e[0] * kern
        out[1] = -dz * e[1] * kern
        out[2] = (dx * e[0] + dy * e[1]) * kern
        return out
    return integrand


def propagation_oscillation(src: PlanarField, target: CylPoint, k: float) -> float:
    """Phase variation (rad) of the Green's integrand along the source radius."""
    x, y, _ = target.cartesian
    dz = target.z - src.plane_z

    def phase(rho, phi):
        r = np.sqrt((rho * np.cos(phi) - x) ** 2 + (rho * np.sin(phi) - y) ** 2 + dz * dz)
        total = k * r
        if src.eikonal is not None:
            total = total + src.eikonal(rho)
        return total

    return phase_variation(phase, 0.0, src.rho_max)


def propagate_to_point_array(src: PlanarField, target: CylPoint, cfg: OpticalConfig,
                             spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    dz = target.z - src.plane_z
    if dz <= 0:
        raise InvalidInputError("target must lie strictly beyond the source plane")
    k = cfg.k
    if k * dz < 10:
        warnings.warn(f"k*dz = {k * dz:.3g} < 10: far-field kernel is inaccurate here",
                      RuntimeWarning, stacklevel=3)
    x, y, _ = target.cartesian
    osc = propagation_oscillation(src, target, k)
    result = integrate_2d_polar(_green_integrand(src, x, y, dz, k), 0.0, src.rho_max,
                                spec, oscillation=osc)
    return np.asarray(result, dtype=complex)


def propagate_to_point(src: PlanarField, target: CylPoint, cfg: OpticalConfig,
                       spec: QuadratureSpec = DEFAULT_SPEC) -> ComplexField3:
    """Field at ``target`` radiated by the planar source ``src``."""
    return ComplexField3.from_array(propagate_to_point_array(src, target, cfg, spec))


def propagate_to_plane(src: PlanarField, target_z: float, rho_axis, phi_axis,
                       cfg: OpticalConfig, spec: QuadratureSpec = DEFAULT_SPEC,
                       threads: int | None = None) -> PlanarField:
    """Sample the propagated field on a ``(rho, phi)`` grid of the plane ``target_z``."""
    rho_axis = np.asarray(rho_axis, dtype=float)
    phi_axis = np.asarray(phi_axis, dtype=float)
    jobs = [(i, j) for i in range(rho_axis.size) for j in range(phi_axis.size)]

    def one(job):
        i, j = job
        return propagate_to_point_array(src, CylPoint(rho_axis[i], phi_axis[j], target_z), cfg, spec)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(job) for job in jobs]
    values = np.empty((3, rho_axis.size, phi_axis.size), dtype=complex)
    for (i, j), value in zip(jobs, results):
        values[:, i, j] = value
    return PlanarField.from_samples(target_z, rho_axis, phi_axis, values)
