from __future__ import annotations

import math

import numpy as np
import pytest

from focalfield.core import (ComplexField3, CylPoint, OpticalConfig, apply_lens,
                             gaussian_input_field, lens_cos_theta, lens_field_array,
                             rotation_matrix_U)
from focalfield.errors import InvalidInputError
from focalfield.quadrature import integrate_2d_polar


def test_gaussian_on_axis_and_at_waist():
    cfg = OpticalConfig(beam_waist=1e-3, focal_length=4.5e-3)
    assert gaussian_input_field(CylPoint(0.0), cfg).as_array() == pytest.approx([1, 0, 0])
    at_w = gaussian_input_field(CylPoint(1e-3, 0.3), cfg).as_array()
    assert at_w == pytest.approx([math.exp(-1), 0, 0], abs=1e-15)


def test_gaussian_power_matches_closed_form():
    cfg = OpticalConfig(beam_waist=1.0, focal_length=3.0, aperture_radius=10.0)

    def intensity(rho, phi):
        return rho * np.exp(-2 * rho ** 2) + 0 * phi

    assert integrate_2d_polar(intensity, 0.0, 5 * cfg.beam_waist) == pytest.approx(math.pi / 2, rel=1e-10)


@pytest.mark.parametrize("pol", [(0, 0, 1), (1, 1, 0), (0.6, 0.8, 0.1)])
def test_gaussian_rejects_bad_polarization(pol):
    with pytest.raises(InvalidInputError):
        gaussian_input_field(CylPoint(0.0), OpticalConfig(), pol)


def test_gaussian_is_azimuthally_symmetric():
    cfg = OpticalConfig()
    values = [gaussian_input_field(CylPoint(0.7e-3, phi), cfg).ex for phi in np.linspace(0, 6, 7)]
    assert np.ptp(np.abs(values)) == 0.0


def test_rotation_identity_on_axis():
    assert rotation_matrix_U(0.0, 1.3, 4.5e-3) == pytest.approx(np.eye(3), abs=1e-15)


def test_rotation_at_45_degrees():
    h = math.sqrt(2) / 2
    expected = np.array([[h, 0, -h], [0, 1, 0], [h, 0, h]])
    assert rotation_matrix_U(2.0, 0.0, 2.0) == pytest.approx(expected, abs=1e-15)


def test_rotation_matches_explicit_product():
    rho, phi, f = 1.7e-3, 2.2, 4.5e-3
    c = f / math.hypot(rho, f)
    s = rho / math.hypot(rho, f)

    def rz(a):
        return np.array([[math.cos(a), -math.sin(a), 0], [math.sin(a), math.cos(a), 0], [0, 0, 1]])

    ry = np.array([[c, 0, -s], [0, 1, 0], [s, 0, c]])
    assert rotation_matrix_U(rho, phi, f) == pytest.approx(rz(phi) @ ry @ rz(-phi), abs=1e-15)


def test_rotation_maps_z_onto_ray_towards_focus():
    rho, phi, f = 1e-3, 0.4, 4.5e-3
    ray = np.array([-rho * math.cos(phi), -rho * math.sin(phi), f]) / math.hypot(rho, f)
    assert rotation_matrix_U(rho, phi, f) @ np.array([0, 0, 1.0]) == pytest.approx(ray, abs=1e-15)


def test_apply_lens_on_axis_is_identity():
    cfg = OpticalConfig()
    e = ComplexField3(0.3 + 0.1j, -0.2j, 0)
    assert apply_lens(e, CylPoint(0.0), cfg).as_array() == pytest.approx(e.as_array(), abs=1e-15)


def test_apply_lens_half_wave_phase():
    # independent evaluation: k (sqrt(2) - 1) f = pi puts the factor at -2^(1/4)
    wavelength = 780e-9
    k = 2 * math.pi / wavelength
    f = math.pi / (k * (math.sqrt(2) - 1))
    cfg = OpticalConfig(wavelength=wavelength, focal_length=f, beam_waist=f, aperture_radius=2 * f)
    out = apply_lens(ComplexField3(0, 1, 0), CylPoint(f, math.pi / 2), cfg).as_array()
    # at phi = pi/2 the y unit vector rotates to (0, cos45, sin45)
    expected = -(2 ** 0.25) * np.array([0, math.sqrt(0.5), math.sqrt(0.5)])
    assert out == pytest.approx(expected, abs=1e-12)


def test_apply_lens_blocks_outside_aperture():
    cfg = OpticalConfig(aperture_radius=1e-3)
    assert apply_lens(ComplexField3(1, 0, 0), CylPoint(1.01e-3), cfg).norm2() == 0.0


def test_transmitted_power_equals_incident_power():
    cfg = OpticalConfig.from_focusing(0.29)

    def transmitted(rho, phi):
        e = lens_field_array(rho, phi, cfg)
        return rho * np.sum(np.abs(e) ** 2, axis=0) * lens_cos_theta(rho, cfg.focal_length)

    def incident(rho, phi):
        return rho * np.exp(-2 * rho ** 2 / cfg.beam_waist ** 2) + 0 * phi

    b = cfg.radial_cutoff
    assert integrate_2d_polar(transmitted, 0, b) == pytest.approx(integrate_2d_polar(incident, 0, b),
                                                                   rel=1e-10)


def test_optical_config_invariants():
    cfg = OpticalConfig.from_focusing(0.29)
    assert cfg.u == 0.29 * cfg.focal_length / cfg.focal_length
    assert cfg.aperture_radius == 5 * cfg.beam_waist
    assert cfg.k == pytest.approx(2 * math.pi / 780e-9)
    for bad in ({"wavelength": 0}, {"focal_length": -1}, {"beam_waist": float("nan")},
                {"aperture_radius": 0}):
        with pytest.raises(InvalidInputError):
            OpticalConfig(**bad)


def test_cyl_point_normalizes_phi():
    assert CylPoint(1.0, -math.pi / 2).phi == pytest.approx(1.5 * math.pi)
    assert CylPoint(1.0, 2 * math.pi).phi == 0.0
    with pytest.raises(InvalidInputError):
        CylPoint(-1.0)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_complex_field_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        ComplexField3(float("nan"), 0, 0)
    with pytest.raises(InvalidInputError):
        ComplexField3(1, 0, 0) * float("inf")
