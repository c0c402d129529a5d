"""Sweep orchestration and result emission.

Each run produces a CSV with the fixed columns ``x, epsilon, eps_lo,
eps_hi`` (preceded by one ``# config_hash=...`` comment line) and a JSON
sidecar.  CSV bytes depend only on the configuration; wall-clock data lives
in the sidecar's ``provenance`` block.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import platform
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .cache import GridCache
from .config import RunConfig, config_hash
from .scattering import ExtinctionGrid, adaptive_axes, build_extinction_grid, extinction_point
from .thermal import (average_with_band, fit_temperature, heating_delta_T, initial_temperature,
                      required_grid_extent)

COLUMNS = ("x", "epsilon", "eps_lo", "eps_hi")


@dataclass
class SweepResult:
    """Ordered ``(x, epsilon, eps_lo, eps_hi)`` records plus provenance."""

    name: str
    x_name: str
    records: list[tuple[float, float, float, float]]
    config_hash: str
    parameters: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for x, eps, lo, hi in self.records:
            if not lo <= eps <= hi:
                raise ValueError(f"band [{lo}, {hi}] does not bracket {eps} at x = {x}")
        xs = [r[0] for r in self.records]
        if any(b < a for a, b in zip(xs, xs[1:])):
            raise ValueError("records must be ordered by x")

    @property
    def x(self) -> np.ndarray:
        return np.array([r[0] for r in self.records])

    @property
    def epsilon(self) -> np.ndarray:
        return np.array([r[1] for r in self.records])

    def csv_text(self) -> str:
        out = io.StringIO()
        out.write(f"# config_hash={self.config_hash}\n")
        out.write(",".join(COLUMNS) + "\n")
        for rec in self.records:
            out.write(",".join(f"{v:.17g}" for v in rec) + "\n")
        return out.getvalue()

    def sidecar(self, csv_name: str, csv_bytes: bytes) -> dict:
        return {
            "name": self.name,
            "csv": csv_name,
            "csv_sha256": hashlib.sha256(csv_bytes).hexdigest(),
            "columns": list(COLUMNS),
            "x_name": self.x_name,
            "records": len(self.records),
            "config_hash": self.config_hash,
            "parameters": self.parameters,
            "provenance": self.provenance,
        }


def provenance(run: RunConfig, **extra) -> dict:
    info = {
        "tool": "focalfield",
        "tool_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "python": platform.python_version(),
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config_source": run.source,
    }
    info.update(extra)
    return info


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_results(results: list[SweepResult], out_dir, config: dict | None = None) -> list[Path]:
    """Write each result as ``<name>.csv`` plus ``<name>.json``.

    Everything is rendered in memory first so a failure leaves no partial
    output behind.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    for res in results:
        csv_bytes = res.csv_text().encode("utf-8")
        side = res.sidecar(f"{res.name}.csv", csv_bytes)
        if config is not None:
            side["config"] = config
        side_bytes = (json.dumps(side, indent=2, sort_keys=True) + "\n").encode("utf-8")
        staged.append((out_dir / f"{res.name}.csv", csv_bytes))
        staged.append((out_dir / f"{res.name}.json", side_bytes))
    for path, data in staged:
        _atomic_write(path, data)
    return [p for p, _ in staged]


def grid_key(run: RunConfig, rho_axis, z_axis) -> str:
    """Cache fingerprint: optics, quadrature, grid settings and the exact axes."""
    axes = hashlib.sha256(np.ascontiguousarray(rho_axis, dtype="<f8").tobytes()
                          + np.ascontiguousarray(z_axis, dtype="<f8").tobytes()).hexdigest()
    payload = {"optics": run.normalized["optics"], "quadrature": run.normalized["quadrature"],
               "grid": run.normalized["grid"], "axes": axes}
    return config_hash(payload)


def grid_axes_for(run: RunConfig, T_max: float | None = None):
    g = run.grid
    T = g["T_max_K"] if T_max is None else T_max
    rho_max, lo, hi = required_grid_extent(run.trap, max(T, 1e-6), g["n_sigma"])
    margin = 1.001
    f = run.optics.focal_length
    center = f + run.trap.offset
    z_lo = center - margin * (center - (f + lo))
    z_hi = center + margin * ((f + hi) - center)
    return adaptive_axes(run.optics, margin * rho_max, (z_lo, z_hi), g["refine"], center=center)


def get_grid(run: RunConfig, cache: GridCache, threads: int | None = None,
             progress=None) -> ExtinctionGrid:
    """Grid for ``run``'s optics, covering ``grid.T_max`` including the trap band."""
    rho, z = grid_axes_for(run)
    key = grid_key(run, rho, z)

    def builder():
        return build_extinction_grid(rho, z, run.optics, run.quadrature, threads=threads,
                                     validate=run.grid["validate"], tolerance=run.grid["tolerance"],
                                     form=run.grid["form"], config_hash=key, progress=progress)

    return cache.get_or_build(key, builder)


def _temperatures(s: dict) -> np.ndarray:
    if s["T_samples"] == 1:
        return np.array([s["T_start_K"]])
    return np.linspace(s["T_start_K"], s["T_stop_K"], s["T_samples"])


def _map(fn, items, threads):
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def run_sweep_temperature(run: RunConfig, cache: GridCache, threads: int | None = None,
                          progress=None) -> SweepResult:
    """Thermal extinction versus temperature (K) at the configured focusing."""
    grid = get_grid(run, cache, threads, progress)
    temps = _temperatures(run.sweep)
    rows = _map(lambda T: average_with_band(grid, run.trap, float(T)), list(temps), threads)
    records = [(float(T), *row) for T, row in zip(temps, rows)]
    return SweepResult("sweep_temperature", "temperature_K", records, run.hash,
                       {"focusing": run.optics.u},
                       provenance(run, grid_fingerprint=grid.config_hash,
                                  grid_shape=list(grid.eps.shape)))


def _focusing_values(s: dict) -> np.ndarray:
    if s["u_samples"] == 1:
        return np.array([s["u_start"]])
    return np.linspace(s["u_start"], s["u_stop"], s["u_samples"])


def run_sweep_focusing(run: RunConfig, cache: GridCache, threads: int | None = None,
                       progress=None) -> list[SweepResult]:
    """Thermal extinction versus focusing ``u``, one result per temperature."""
    temps = [float(T) for T in run.sweep["temperatures_K"]]
    per_T = {T: [] for T in temps}
    fingerprints = []
    for u in _focusing_values(run.sweep):
        sub = run.with_focusing(float(u))
        grid = get_grid(sub, cache, threads, progress)
        fingerprints.append(grid.config_hash)
        for T in temps:
            per_T[T].append((float(u), *average_with_band(grid, sub.trap, T)))
    results = []
    for T in temps:
        name = f"sweep_focusing_T{T * 1e6:g}uK".replace(".", "p")
        results.append(SweepResult(name, "focusing_u", per_T[T], run.hash, {"temperature_K": T},
                                   provenance(run, grid_fingerprints=fingerprints)))
    return results


def run_point(run: RunConfig, cache: GridCache | None = None, threads: int | None = None) -> SweepResult:
    """Extinction of an atom at rest at ``(x_m, f + z_offset_m)``."""
    s = run.sweep
    z = run.optics.focal_length + s["z_offset_m"]
    eps = extinction_point(s["x_m"], z, run.optics, run.quadrature, run.grid["form"])
    return SweepResult("point", "x_m", [(float(s["x_m"]), eps, eps, eps)], run.hash,
                       {"z_m": z, "focusing": run.optics.u}, provenance(run))


@dataclass(frozen=True)
class FitReport:
    measured: float
    temperature: float
    lower: float
    upper: float
    delta_T: float
    initial_temperature: float | None
    config_hash: str

    def as_dict(self) -> dict:
        return {"measured_extinction": self.measured, "temperature_K": self.temperature,
                "temperature_lower_K": self.lower, "temperature_upper_K": self.upper,
                "heating_delta_T_K": self.delta_T, "initial_temperature_K": self.initial_temperature,
                "config_hash": self.config_hash}


def run_fit(run: RunConfig, cache: GridCache, measured: float | None = None,
            threads: int | None = None, progress=None) -> tuple[FitReport, SweepResult]:
    """Fit the temperature reproducing ``measured`` and the heating chain that follows."""
    value = run.sweep["measured_extinction"] if measured is None else float(measured)
    grid = get_grid(run, cache, threads, progress)
    fit = fit_temperature(value, grid, run.trap, T_max=run.grid["T_max_K"])
    dT = heating_delta_T(run.heating, run.trap)
    # a fit colder than half the heating rise has no consistent starting temperature
    T0 = initial_temperature(fit.temperature, dT) if fit.temperature > dT / 2 else None
    report = FitReport(value, fit.temperature, fit.lower, fit.upper, dT, T0, run.hash)
    # x: measured extinction; columns hold the fitted temperature and its band
    result = SweepResult("fit", "measured_extinction",
                         [(value, fit.temperature, fit.lower, fit.upper)], run.hash,
                         report.as_dict(), provenance(run, grid_fingerprint=grid.config_hash))
    return report, result


def verify_output(out_dir, run: RunConfig | None = None) -> list[str]:
    """Check every sidecar in ``out_dir``; returns a list of problems (empty if clean)."""
    out_dir = Path(out_dir)
    problems = []
    sidecars = sorted(out_dir.glob("*.json"))
    if not sidecars:
        return [f"no result sidecars found in {out_dir}"]
    for side_path in sidecars:
        try:
            side = json.loads(side_path.read_text(encoding="utf-8"))
            csv_path = out_dir / side["csv"]
            csv_bytes = csv_path.read_bytes()
        except (OSError, ValueError, KeyError) as exc:
            problems.append(f"{side_path.name}: unreadable ({exc})")
            continue
        if hashlib.sha256(csv_bytes).hexdigest() != side.get("csv_sha256"):
            problems.append(f"{csv_path.name}: content digest does not match its sidecar")
        first = csv_bytes.split(b"\n", 1)[0].decode("utf-8", "replace")
        if first != f"# config_hash={side.get('config_hash')}":
            problems.append(f"{csv_path.name}: embedded config hash differs from the sidecar")
        if "config" in side and config_hash(side["config"]) != side.get("config_hash"):
            problems.append(f"{side_path.name}: recorded config does not hash to config_hash")
        if run is not None and side.get("config_hash") != run.hash:
            problems.append(f"{side_path.name}: produced by a different configuration")
        lines = csv_bytes.decode("utf-8", "replace").splitlines()
        if len(lines) - 2 != side.get("records"):
            problems.append(f"{csv_path.name}: record count differs from the sidecar")
    return problems
