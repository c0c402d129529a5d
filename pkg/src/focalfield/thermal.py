"""Thermal motion of the trapped atom.

The atom sits in a harmonic dipole trap centred on the focus.  Its position
is averaged with the classical canonical weight

    rho * exp(-m (w_rho^2 rho^2 + w_z^2 (z - z_c)^2) / (2 k_B T))

over a precomputed :class:`~focalfield.scattering.ExtinctionGrid`.  The
axial momentum spread uses the thermal occupation of the axial oscillator
and only serves to show that the Doppler shift is negligible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import bisect

from .constants import H_PLANCK, HBAR, KB, RB87_MASS
from .core import OpticalConfig
from .errors import CoverageError, InvalidInputError, NoSolutionError
from .scattering import ExtinctionGrid

#: Number of thermal standard deviations the averaging domain spans.
N_SIGMA = 4.0


@dataclass(frozen=True)
class TrapConfig:
    """Harmonic trap: atomic mass (kg) and angular frequencies (rad/s).

    ``d_omega_rho`` and ``d_omega_z`` are the (symmetric) uncertainties of
    the frequencies; ``offset`` is the axial trap-centre displacement from
    the focus (m).
    """

    omega_rho: float
    omega_z: float
    mass: float = RB87_MASS
    d_omega_rho: float = 0.0
    d_omega_z: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        for name in ("mass", "omega_rho", "omega_z"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidInputError(f"{name} must be finite and > 0, got {value}")
        if not (0 <= self.d_omega_rho < self.omega_rho and 0 <= self.d_omega_z < self.omega_z):
            raise InvalidInputError("frequency uncertainties must be >= 0 and below the frequency")
        if not math.isfinite(self.offset):
            raise InvalidInputError("offset must be finite")

    @classmethod
    def from_kHz(cls, f_rho: float, f_z: float, df_rho: float = 0.0, df_z: float = 0.0,
                 **kwargs) -> "TrapConfig":
        """Build from ordinary frequencies in kHz (``omega = 2 pi f``)."""
        s = 2e3 * math.pi
        return cls(omega_rho=s * f_rho, omega_z=s * f_z, d_omega_rho=s * df_rho,
                   d_omega_z=s * df_z, **kwargs)

    def sigma(self, T: float) -> tuple[float, float]:
        """Thermal position spreads ``(sigma_rho, sigma_z)`` in m."""
        if T < 0:
            raise InvalidInputError(f"temperature must be >= 0, got {T}")
        v = math.sqrt(KB * T / self.mass)
        return v / self.omega_rho, v / self.omega_z

    def band_edges(self) -> list["TrapConfig"]:
        """The traps at the corners of the frequency uncertainty box."""
        corners = []
        for sr, sz in itertools.product((-1, 1), repeat=2):
            corners.append(replace(self, omega_rho=self.omega_rho + sr * self.d_omega_rho,
                                   omega_z=self.omega_z + sz * self.d_omega_z,
                                   d_omega_rho=0.0, d_omega_z=0.0))
        return corners

    @property
    def has_band(self) -> bool:
        return self.d_omega_rho > 0 or self.d_omega_z > 0


@dataclass(frozen=True)
class HeatingParams:
    """Photon-recoil heating during the probe window."""

    scattering_rate: float
    probe_duration: float
    recoil_frequency: float

    def __post_init__(self):
        for name in ("scattering_rate", "probe_duration", "recoil_frequency"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise InvalidInputError(f"{name} must be finite and >= 0, got {value}")


def mean_sq_pz(T: float, trap: TrapConfig) -> float:
    """Thermal ``<p_z^2>`` (kg^2 m^2 / s^2) of the axial oscillator."""
    if not T > 0:
        raise InvalidInputError(f"temperature must be > 0, got {T}")
    alpha = HBAR * trap.omega_z / (KB * T)
    occupation = 1.0 / math.expm1(alpha) if alpha < 700 else 0.0
    return trap.mass * HBAR * trap.omega_z * (occupation + 0.5)


def doppler_shift(T: float, trap: TrapConfig, cfg: OpticalConfig) -> float:
    """First-order Doppler shift ``k v_rms`` (rad/s) from the axial momentum spread."""
    return cfg.k * math.sqrt(mean_sq_pz(T, trap)) / trap.mass


def doppler_ratio(T: float, trap: TrapConfig, cfg: OpticalConfig, linewidth: float) -> float:
    """``k v_rms`` relative to a transition linewidth given in Hz.

    The shift is not divided by 2 pi, matching the usual quick estimate
    (``k v ~ 800 kHz`` against a 30 MHz line).
    """
    if not linewidth > 0:
        raise InvalidInputError(f"linewidth must be > 0, got {linewidth}")
    return doppler_shift(T, trap, cfg) / linewidth


def heating_energy(h: HeatingParams) -> float:
    """Energy (J) deposited by recoils: one kick on absorption and one on emission."""
    return 2.0 * h.scattering_rate * h.probe_duration * H_PLANCK * h.recoil_frequency


def heating_delta_T(h: HeatingParams, trap: TrapConfig | None = None) -> float:
    """Temperature rise (K) over the probe window.

    The mean energy of a classical 3-D oscillator is ``3 k_B T``, so the
    deposited energy spreads as ``dT = dE / (3 k_B)``; this assumes the
    radial and axial modes share one temperature.  ``trap`` is accepted for
    interface symmetry and does not enter the classical result.
    """
    return heating_energy(h) / (3.0 * KB)


def initial_temperature(T_avg: float, delta_T: float) -> float:
    """Temperature at the start of a probe window with linear heating."""
    if delta_T < 0:
        raise InvalidInputError(f"delta_T must be >= 0, got {delta_T}")
    if not T_avg > delta_T / 2:
        raise InvalidInputError(f"T_avg = {T_avg} must exceed delta_T / 2 = {delta_T / 2}")
    return T_avg - delta_T / 2


def required_grid_extent(trap: TrapConfig, T_max: float, n_sigma: float = N_SIGMA,
                         include_band: bool = True) -> tuple[float, float, float]:
    """``(rho_max, z_lo, z_hi)`` relative to the focus covering ``n_sigma`` at ``T_max``.

    With ``include_band`` the softest trap of the uncertainty box is used, so
    band-edge averages stay inside the grid.
    """
    soft = replace(trap, omega_rho=trap.omega_rho - trap.d_omega_rho,
                   omega_z=trap.omega_z - trap.d_omega_z) if include_band else trap
    s_rho, s_z = soft.sigma(T_max)
    return n_sigma * s_rho, trap.offset - n_sigma * s_z, trap.offset + n_sigma * s_z


def _trap_center(grid: ExtinctionGrid, trap: TrapConfig, center: float | None) -> float:
    if center is not None:
        return center
    try:
        return float(grid.meta["focal_length"]) + trap.offset
    except KeyError:
        raise InvalidInputError("grid has no focal_length metadata; pass center explicitly") from None


def max_covered_temperature(grid: ExtinctionGrid, trap: TrapConfig, center: float | None = None,
                            n_sigma: float = N_SIGMA) -> float:
    """Largest temperature whose ``n_sigma`` cloud fits inside ``grid``."""
    zc = _trap_center(grid, trap, center)
    dz = min(zc - grid.z[0], grid.z[-1] - zc)
    if dz <= 0:
        return 0.0
    s_rho_max = grid.rho[-1] / n_sigma
    s_z_max = dz / n_sigma
    t_rho = trap.mass * (trap.omega_rho * s_rho_max) ** 2 / KB
    t_z = trap.mass * (trap.omega_z * s_z_max) ** 2 / KB
    return min(t_rho, t_z)


def thermal_weights(trap: TrapConfig, T: float, center: float, n_rho: int = 96, n_z: int = 192,
                    n_sigma: float = N_SIGMA, normalize: bool = True):
    """Tensor Gauss-Legendre nodes and canonical weights on the ``n_sigma`` box.

    Returns ``(rho, z, weights)`` with ``weights`` of shape ``(n_rho, n_z)``
    including the ``rho`` Jacobian; normalized to unit sum by default.
    """
    s_rho, s_z = trap.sigma(T)
    xr, wr = np.polynomial.legendre.leggauss(n_rho)
    xz, wz = np.polynomial.legendre.leggauss(n_z)
    half_r = 0.5 * n_sigma * s_rho
    rho = half_r * (xr + 1.0)
    z = center + n_sigma * s_z * xz
    w_rho = half_r * wr * rho * np.exp(-0.5 * (rho / s_rho) ** 2)
    w_z = n_sigma * s_z * wz * np.exp(-0.5 * ((z - center) / s_z) ** 2)
    weights = np.outer(w_rho, w_z)
    if normalize:
        weights /= weights.sum()
    return rho, z, weights


def thermal_average_extinction(grid: ExtinctionGrid, trap: TrapConfig, T: float,
                               center: float | None = None, n_rho: int = 96, n_z: int = 192,
                               n_sigma: float = N_SIGMA) -> float:
    """Canonical average of the gridded extinction at temperature ``T`` (K).

    ``center`` is the absolute axial trap position; by default the grid's
    focal length plus ``trap.offset``.  ``T = 0`` returns the extinction at
    the trap centre.

    Raises
    ------
    CoverageError
        If the ``n_sigma`` box does not fit inside the grid.
    """
    if not (math.isfinite(T) and T >= 0):
        raise InvalidInputError(f"temperature must be finite and >= 0, got {T}")
    zc = _trap_center(grid, trap, center)
    if T == 0:
        if not grid.covers(0.0, zc, zc):
            raise CoverageError(f"trap centre z = {zc:.6g} m lies outside the grid")
        return float(grid(0.0, zc))
    s_rho, s_z = trap.sigma(T)
    need = (n_sigma * s_rho, zc - n_sigma * s_z, zc + n_sigma * s_z)
    if not grid.covers(*need):
        raise CoverageError(
            f"grid rho <= {grid.rho[-1]:.4g} m, z in [{grid.z[0]:.6g}, {grid.z[-1]:.6g}] m does not "
            f"cover {n_sigma:g} sigma at T = {T:.4g} K: need rho <= {need[0]:.4g} m and "
            f"z in [{need[1]:.6g}, {need[2]:.6g}] m")
    rho, z, weights = thermal_weights(trap, T, zc, n_rho, n_z, n_sigma)
    rr, zz = np.meshgrid(np.minimum(rho, grid.rho[-1]), np.clip(z, grid.z[0], grid.z[-1]),
                         indexing="ij")
    return float(np.sum(weights * grid(rr, zz)))


@dataclass(frozen=True)
class TemperatureFit:
    """Fitted temperature (K) with the band from the trap-frequency uncertainty."""

    temperature: float
    lower: float
    upper: float
    measured: float

    @property
    def uncertainty(self) -> float:
        return 0.5 * (self.upper - self.lower)


def _fit_one(measured: float, grid: ExtinctionGrid, trap: TrapConfig, center: float,
             T_max: float | None, xtol: float) -> float:
    top = thermal_average_extinction(grid, trap, 0.0, center)
    if measured > top:
        raise NoSolutionError(f"measured extinction {measured:.6g} exceeds the zero-temperature "
                              f"value {top:.6g}")
    if measured == top:
        return 0.0
    covered = max_covered_temperature(grid, trap, center)
    T_hi = covered if T_max is None else min(T_max, covered)
    bottom = thermal_average_extinction(grid, trap, T_hi, center)
    if measured < bottom:
        raise NoSolutionError(f"measured extinction {measured:.6g} is below the value "
                              f"{bottom:.6g} at the largest covered temperature {T_hi:.4g} K")

    def residual(T):
        return thermal_average_extinction(grid, trap, T, center) - measured

    return float(bisect(residual, 0.0, T_hi, xtol=xtol, rtol=1e-12, maxiter=200))


def fit_temperature(measured: float, grid: ExtinctionGrid, trap: TrapConfig,
                    center: float | None = None, T_max: float | None = None,
                    xtol: float = 1e-10) -> TemperatureFit:
    """Invert ``<eps>(T) = measured`` by bisection on ``[0, T_max]``.

    ``T_max`` defaults to the largest temperature the grid covers.  The band
    is the range of refits over the corners of the trap-frequency box.

    Raises
    ------
    NoSolutionError
        If ``measured`` is outside the curve's range on the bracket.
    """
    if not math.isfinite(measured):
        raise InvalidInputError("measured extinction must be finite")
    zc = _trap_center(grid, trap, center)
    T = _fit_one(measured, grid, trap, zc, T_max, xtol)
    values = [T]
    for edge in trap.band_edges() if trap.has_band else []:
        values.append(_fit_one(measured, grid, edge, zc, T_max, xtol))
    return TemperatureFit(T, min(values), max(values), measured)


def average_with_band(grid: ExtinctionGrid, trap: TrapConfig, T: float,
                      center: float | None = None) -> tuple[float, float, float]:
    """``(<eps>, lower, upper)`` at ``T`` over the trap-frequency box."""
    central = thermal_average_extinction(grid, trap, T, center)
    values = [central]
    if trap.has_band and T > 0:
        values += [thermal_average_extinction(grid, e, T, center) for e in trap.band_edges()]
    return central, min(values), max(values)
