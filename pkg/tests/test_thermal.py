from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.special import erf

from focalfield.constants import HBAR, KB, RB87_MASS
from focalfield.core import OpticalConfig
from focalfield.errors import CoverageError, InvalidInputError, NoSolutionError
from focalfield.scattering import ExtinctionGrid
from focalfield.thermal import (HeatingParams, TrapConfig, average_with_band, doppler_ratio,
                                doppler_shift, fit_temperature, heating_delta_T, heating_energy,
                                initial_temperature, max_covered_temperature, mean_sq_pz,
                                required_grid_extent, thermal_average_extinction, thermal_weights)

F = 4.5e-3


@pytest.fixture(scope="module")
def flat_grid():
    rho = np.linspace(0.0, 5e-6, 11)
    z = np.linspace(F - 40e-6, F + 40e-6, 21)
    return ExtinctionGrid(rho, z, np.full((11, 21), 0.123), meta={"focal_length": F})


def test_trap_from_kHz(trap):
    assert trap.omega_rho == pytest.approx(2 * math.pi * 56e3)
    assert trap.d_omega_z == pytest.approx(2 * math.pi * 250)
    assert trap.mass == RB87_MASS
    with pytest.raises(InvalidInputError):
        TrapConfig(omega_rho=-1.0, omega_z=1.0)
    with pytest.raises(InvalidInputError):
        TrapConfig(omega_rho=1.0, omega_z=1.0, d_omega_z=2.0)


def test_band_edges_cover_corners(trap):
    edges = trap.band_edges()
    assert len(edges) == 4
    assert {round(e.omega_rho / (2e3 * math.pi), 9) for e in edges} == {52.0, 60.0}
    assert not any(e.has_band for e in edges)


def test_mean_sq_pz_limits(trap):
    zero_point = trap.mass * HBAR * trap.omega_z / 2
    assert mean_sq_pz(1e-9, trap) == pytest.approx(zero_point, rel=1e-12)
    assert mean_sq_pz(1e-3, trap) == pytest.approx(trap.mass * KB * 1e-3, rel=1e-2)
    ts = np.geomspace(1e-8, 1e-3, 30)
    values = [mean_sq_pz(t, trap) for t in ts]
    assert all(a < b for a, b in zip(values, values[1:]))
    assert min(values) >= zero_point
    with pytest.raises(InvalidInputError):
        mean_sq_pz(0.0, trap)


def test_doppler_estimate(trap):
    cfg = OpticalConfig()
    assert doppler_shift(100e-6, trap, cfg) == pytest.approx(800e3, rel=0.05)
    assert doppler_ratio(100e-6, trap, cfg, 30e6) == pytest.approx(800e3 / 30e6, rel=0.05)


def test_doppler_floor_and_sqrt_scaling(trap):
    cfg = OpticalConfig()
    floor = cfg.k * math.sqrt(HBAR * trap.omega_z / (2 * trap.mass)) / 30e6
    assert doppler_ratio(1e-10, trap, cfg, 30e6) == pytest.approx(floor, rel=1e-9)
    r1 = doppler_ratio(1e-3, trap, cfg, 30e6)
    r4 = doppler_ratio(4e-3, trap, cfg, 30e6)
    assert r4 / r1 == pytest.approx(2.0, rel=1e-3)
    with pytest.raises(InvalidInputError):
        doppler_ratio(1e-4, trap, cfg, 0.0)


def test_heating_chain(trap):
    h = HeatingParams(2500.0, 0.140, 3.8e3)
    assert heating_energy(h) == pytest.approx(1.76e-27, rel=5e-3)
    dT = heating_delta_T(h, trap)
    assert dT == pytest.approx(42.6e-6, abs=0.1e-6)
    assert initial_temperature(185e-6, 42e-6) == pytest.approx(164e-6)
    assert heating_delta_T(HeatingParams(0.0, 0.14, 3.8e3)) == 0.0
    assert heating_delta_T(HeatingParams(2500.0, 0.28, 3.8e3)) == pytest.approx(2 * dT, rel=1e-14)


def test_initial_temperature_arithmetic():
    assert initial_temperature(100e-6, 40e-6) == pytest.approx(80e-6)
    assert initial_temperature(100e-6, 0.0) == 100e-6
    with pytest.raises(InvalidInputError):
        initial_temperature(10e-6, 40e-6)


def test_required_extent_uses_soft_band_edge(trap):
    rho, lo, hi = required_grid_extent(trap, 400e-6)
    soft = math.sqrt(KB * 400e-6 / trap.mass) / (trap.omega_rho - trap.d_omega_rho)
    assert rho == pytest.approx(4 * soft)
    assert lo == -hi


def test_canonical_weight_normalization(trap):
    T = 80e-6
    s_rho, s_z = trap.sigma(T)
    _, _, raw = thermal_weights(trap, T, F, normalize=False)
    exact = s_rho ** 2 * (1 - math.exp(-8)) * s_z * math.sqrt(2 * math.pi) * erf(4 / math.sqrt(2))
    assert raw.sum() == pytest.approx(exact, rel=1e-10)
    _, _, norm = thermal_weights(trap, T, F)
    assert abs(norm.sum() - 1) < 1e-12


def test_constant_extinction_averages_to_itself(flat_grid, trap):
    for T in (1e-6, 20e-6, 60e-6):
        assert thermal_average_extinction(flat_grid, trap, T) == pytest.approx(0.123, rel=1e-12)


def test_coverage_error_names_ranges(flat_grid, trap):
    with pytest.raises(CoverageError, match="need rho"):
        thermal_average_extinction(flat_grid, trap, 5e-3)
    assert max_covered_temperature(flat_grid, trap) < 5e-3


def test_zero_temperature_returns_center(grid029, trap):
    center = grid029(0.0, F)
    assert thermal_average_extinction(grid029, trap, 0.0) == center
    assert abs(thermal_average_extinction(grid029, trap, 1e-9) - center) < 1e-3


def test_average_below_center_and_strictly_decreasing(grid029, trap):
    center = thermal_average_extinction(grid029, trap, 0.0)
    temps = np.linspace(1e-6, 400e-6, 20)
    values = [thermal_average_extinction(grid029, trap, T) for T in temps]
    assert all(v <= center for v in values)
    assert all(a > b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("T_star", [50e-6, 100e-6, 200e-6])
def test_fit_round_trip(grid029, trap, T_star):
    eps = thermal_average_extinction(grid029, trap, T_star)
    assert fit_temperature(eps, grid029, trap).temperature == pytest.approx(T_star, rel=1e-2)


def test_fit_at_center_value_is_zero(grid029, trap):
    assert fit_temperature(grid029(0.0, F), grid029, trap).temperature == 0.0


def test_fit_out_of_range(grid029, trap):
    center = float(grid029(0.0, F))
    with pytest.raises(NoSolutionError):
        fit_temperature(center + 0.01, grid029, trap)
    with pytest.raises(NoSolutionError):
        fit_temperature(1e-4, grid029, trap)


def test_band_brackets_central(grid029, trap):
    mid, lo, hi = average_with_band(grid029, trap, 150e-6)
    assert lo < mid < hi
    fit = fit_temperature(mid, grid029, trap)
    assert fit.lower < fit.temperature < fit.upper


def test_band_collapses_without_uncertainty(grid029):
    sharp = TrapConfig.from_kHz(56.0, 7.0)
    mid, lo, hi = average_with_band(grid029, sharp, 150e-6)
    assert lo == mid == hi
