"""JSON run configuration.

All physical quantities use SI units and carry the unit in the key name
(``focal_length_m``, ``omega_rho_rad_per_s``).  A few convenience spellings
are converted while parsing:

* ``<name>_kHz`` for trap frequencies: ordinary frequency, ``omega = 2 pi f``;
* ``<name>_uK`` for temperatures, in microkelvin;
* ``focusing`` (``u = w_L / f``) instead of ``beam_waist_m``.

Unknown keys are rejected so typos do not silently fall back to defaults.
The normalized configuration (SI only) is what gets hashed.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .constants import DEFAULT_FOCAL_LENGTH, DEFAULT_WAVELENGTH, RB87_MASS
from .core import OpticalConfig
from .errors import ConfigError, FocalFieldError
from .quadrature import QuadratureSpec
from .thermal import HeatingParams, TrapConfig

SWEEP_KINDS = ("temperature", "focusing", "point", "fit")
TWO_PI_KHZ = 2e3 * math.pi

_DEFAULTS = {
    "optics": {
        "wavelength_m": DEFAULT_WAVELENGTH,
        "focal_length_m": DEFAULT_FOCAL_LENGTH,
        "beam_waist_m": None,
        "aperture_radius_m": None,
        "input_amplitude_V_per_m": 1.0,
    },
    "trap": {
        "mass_kg": RB87_MASS,
        "omega_rho_rad_per_s": TWO_PI_KHZ * 56.0,
        "d_omega_rho_rad_per_s": TWO_PI_KHZ * 4.0,
        "omega_z_rad_per_s": TWO_PI_KHZ * 7.0,
        "d_omega_z_rad_per_s": TWO_PI_KHZ * 0.25,
        "offset_m": 0.0,
    },
    "heating": {
        "scattering_rate_per_s": 2500.0,
        "probe_duration_s": 0.140,
        "recoil_frequency_Hz": 3.8e3,
    },
    "quadrature": {
        "relative_tolerance": 1e-8,
        "max_panels": 2 ** 16,
        "nodes_per_panel": 32,
        "phi_nodes": 64,
        "max_phi_nodes": 2 ** 14,
    },
    "grid": {
        "T_max_K": 400e-6,
        "n_sigma": 4.0,
        "refine": 1.0,
        "validate": True,
        "tolerance": 1e-4,
        "form": "exact",
    },
    "sweep": {
        "kind": "temperature",
        "T_start_K": 0.0,
        "T_stop_K": 400e-6,
        "T_samples": 41,
        "u_start": 0.1,
        "u_stop": 0.5,
        "u_samples": 9,
        "temperatures_K": [0.0, 10e-6, 50e-6, 185e-6],
        "x_m": 0.0,
        "z_offset_m": 0.0,
        "measured_extinction": 0.098,
    },
}

# convenience key -> (canonical key, factor); factors below 1 are applied as
# divisions by their inverse so that e.g. 400 uK maps to exactly 400e-6 K
MICRO = 1e-6
_CONVERSIONS = {
    "trap": {
        "omega_rho_kHz": ("omega_rho_rad_per_s", TWO_PI_KHZ),
        "d_omega_rho_kHz": ("d_omega_rho_rad_per_s", TWO_PI_KHZ),
        "omega_z_kHz": ("omega_z_rad_per_s", TWO_PI_KHZ),
        "d_omega_z_kHz": ("d_omega_z_rad_per_s", TWO_PI_KHZ),
    },
    "grid": {"T_max_uK": ("T_max_K", MICRO)},
    "sweep": {
        "T_start_uK": ("T_start_K", MICRO),
        "T_stop_uK": ("T_stop_K", MICRO),
        "temperatures_uK": ("temperatures_K", MICRO),
    },
}

_TOP_LEVEL = set(_DEFAULTS) | {"output", "cache"}


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(normalized: dict) -> str:
    """SHA-256 of the canonical JSON form of a normalized configuration."""
    return hashlib.sha256(_canonical_json(normalized).encode("utf-8")).hexdigest()


def _scale(value, factor):
    if isinstance(value, list):
        return [_scale(v, factor) for v in value]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}")
    if factor == MICRO:
        return float(value) / 1e6
    return float(value) * factor


def _merge_section(name: str, given: dict) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"section {name!r} must be a JSON object")
    out = json.loads(json.dumps(_DEFAULTS[name]))
    conversions = _CONVERSIONS.get(name, {})
    seen = {}
    for key, value in given.items():
        if key == "focusing" and name == "optics":
            target, value = "focusing", value
        elif key in conversions:
            target, factor = conversions[key]
            value = _scale(value, factor)
        elif key in out:
            target = key
        else:
            allowed = sorted(set(out) | set(conversions) | ({"focusing"} if name == "optics" else set()))
            raise ConfigError(f"unknown key {name}.{key}; allowed: {', '.join(allowed)}")
        if target in seen:
            raise ConfigError(f"{name}.{key} duplicates {name}.{seen[target]}")
        seen[target] = key
        out[target] = value
    return out


@dataclass(frozen=True)
class RunConfig:
    """A validated run: physics, numerics, sweep descriptor and output settings."""

    optics: OpticalConfig
    trap: TrapConfig
    heating: HeatingParams
    quadrature: QuadratureSpec
    grid: dict
    sweep: dict
    normalized: dict
    output_dir: Path | None = None
    cache_dir: Path | None = None
    svg: bool = False
    source: str | None = None
    _hash: str = field(default="", repr=False)

    @property
    def hash(self) -> str:
        return self._hash

    def with_focusing(self, u: float) -> "RunConfig":
        """Same run with the beam waist set to ``u f``."""
        norm = json.loads(json.dumps(self.normalized))
        norm["optics"]["beam_waist_m"] = u * self.optics.focal_length
        return from_normalized(norm, self.output_dir, self.cache_dir, self.svg, self.source)


def _build(norm: dict) -> tuple:
    o = norm["optics"]
    try:
        optics = OpticalConfig(wavelength=o["wavelength_m"], focal_length=o["focal_length_m"],
                               beam_waist=o["beam_waist_m"], aperture_radius=o["aperture_radius_m"],
                               input_amplitude=o["input_amplitude_V_per_m"])
        t = norm["trap"]
        trap = TrapConfig(omega_rho=t["omega_rho_rad_per_s"], omega_z=t["omega_z_rad_per_s"],
                          mass=t["mass_kg"], d_omega_rho=t["d_omega_rho_rad_per_s"],
                          d_omega_z=t["d_omega_z_rad_per_s"], offset=t["offset_m"])
        h = norm["heating"]
        heating = HeatingParams(h["scattering_rate_per_s"], h["probe_duration_s"],
                                h["recoil_frequency_Hz"])
        q = norm["quadrature"]
        spec = QuadratureSpec(relative_tolerance=q["relative_tolerance"], max_panels=int(q["max_panels"]),
                              nodes_per_panel=int(q["nodes_per_panel"]), phi_nodes=int(q["phi_nodes"]),
                              max_phi_nodes=int(q["max_phi_nodes"]))
    except (TypeError, FocalFieldError) as exc:
        raise ConfigError(f"invalid physics parameters: {exc}") from exc
    return optics, trap, heating, spec


def _validate_sweep(norm: dict) -> None:
    s = norm["sweep"]
    g = norm["grid"]
    if s["kind"] not in SWEEP_KINDS:
        raise ConfigError(f"sweep.kind must be one of {SWEEP_KINDS}, got {s['kind']!r}")
    if g["form"] not in ("exact", "printed"):
        raise ConfigError("grid.form must be 'exact' or 'printed'")
    if not (g["T_max_K"] > 0 and g["n_sigma"] > 0 and g["refine"] > 0 and g["tolerance"] > 0):
        raise ConfigError("grid.T_max_K, n_sigma, refine and tolerance must be > 0")
    if not (0 <= s["T_start_K"] <= s["T_stop_K"]):
        raise ConfigError("sweep temperature range must satisfy 0 <= T_start <= T_stop")
    if s["T_stop_K"] > g["T_max_K"]:
        raise ConfigError(f"sweep.T_stop_K = {s['T_stop_K']:.4g} exceeds grid.T_max_K = "
                          f"{g['T_max_K']:.4g}; raise grid.T_max_uK")
    for key in ("T_samples", "u_samples"):
        if not (isinstance(s[key], int) and not isinstance(s[key], bool) and s[key] >= 1):
            raise ConfigError(f"sweep.{key} must be an integer >= 1")
    if s["T_samples"] == 1 and s["T_start_K"] != s["T_stop_K"]:
        raise ConfigError("a single-sample temperature sweep needs T_start == T_stop")
    if not (0 < s["u_start"] <= s["u_stop"]):
        raise ConfigError("sweep focusing range must satisfy 0 < u_start <= u_stop")
    if s["u_samples"] == 1 and s["u_start"] != s["u_stop"]:
        raise ConfigError("a single-sample focusing sweep needs u_start == u_stop")
    temps = s["temperatures_K"]
    if not temps or any(t < 0 or t > g["T_max_K"] for t in temps):
        raise ConfigError("sweep.temperatures must be non-empty and within [0, grid.T_max]")


def from_normalized(norm: dict, output_dir=None, cache_dir=None, svg=False, source=None) -> RunConfig:
    """Build a :class:`RunConfig` from an already normalized dictionary."""
    _validate_sweep(norm)
    optics, trap, heating, spec = _build(norm)
    return RunConfig(optics, trap, heating, spec, dict(norm["grid"]), dict(norm["sweep"]), norm,
                     Path(output_dir) if output_dir else None, Path(cache_dir) if cache_dir else None,
                     bool(svg), source, config_hash(norm))


def parse_config(data: dict, source: str | None = None) -> RunConfig:
    """Validate and normalize a configuration dictionary.

    Raises
    ------
    ConfigError
        On unknown keys, duplicated spellings, wrong types or values that
        violate the physics invariants.
    """
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(data) - _TOP_LEVEL
    if unknown:
        raise ConfigError(f"unknown top-level keys: {', '.join(sorted(unknown))}")
    norm = {name: _merge_section(name, data.get(name, {})) for name in _DEFAULTS}
    optics = norm["optics"]
    u = optics.pop("focusing", None)
    if u is not None:
        if optics["beam_waist_m"] is not None:
            raise ConfigError("give either optics.focusing or optics.beam_waist_m, not both")
        optics["beam_waist_m"] = _scale(u, 1.0) * optics["focal_length_m"]
    if optics["beam_waist_m"] is None:
        optics["beam_waist_m"] = 0.29 * optics["focal_length_m"]
    for section, values in norm.items():
        for key, value in values.items():
            if isinstance(value, (int, float)) and not isinstance(value, bool) and not math.isfinite(value):
                raise ConfigError(f"{section}.{key} must be finite")
    out = data.get("output", {})
    cache = data.get("cache", {})
    if not isinstance(out, dict) or not isinstance(cache, dict):
        raise ConfigError("'output' and 'cache' must be JSON objects")
    if set(out) - {"directory", "svg"} or set(cache) - {"directory"}:
        raise ConfigError("output accepts 'directory' and 'svg'; cache accepts 'directory'")
    return from_normalized(norm, out.get("directory"), cache.get("directory"),
                           out.get("svg", False), source)


def load_config(path) -> RunConfig:
    """Read and parse a JSON configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_config(data, source=os.fspath(path))


def default_config() -> RunConfig:
    return parse_config({})
