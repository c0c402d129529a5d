"""Adaptive quadrature for oscillatory radial and periodic azimuthal integrals.

Radial integrals use composite Gauss-Legendre on equal panels.  The initial
panel count is seeded from the oscillation of the integrand (its total phase
variation in radians) so that no panel spans more than half a period, then
doubled until two successive estimates agree.  Azimuthal integrals over a
full period use the trapezoid rule, which converges spectrally for smooth
periodic integrands; the estimate on ``N`` nodes is checked against the one
on the even subset of ``N/2`` nodes before doubling.

Integrands are vectorized callables.  A radial integrand receives a 1-D node
array and returns an array whose last axis runs over the nodes; a polar
integrand receives ``rho`` of shape ``(n_r, 1)`` and ``phi`` of shape
``(1, n_phi)`` and returns ``(..., n_r, n_phi)``.  Leading axes are kept, so
vector fields integrate in one pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, InvalidInputError

TWO_PI = 2.0 * math.pi
_ROUNDOFF = 1e-14
_CHUNK_NODES = 1 << 14


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and refinement limits.

    ``oscillation_scale`` is the phase variation (rad) of the integrand over
    the radial domain, ``k * L`` for a plain ``exp(ikx)``; it seeds the panel
    count when the caller supplies nothing better.
    """

    relative_tolerance: float = 1e-8
    max_panels: int = 2 ** 16
    nodes_per_panel: int = 32
    oscillation_scale: float = 0.0
    phi_nodes: int = 64
    max_phi_nodes: int = 2 ** 14

    def __post_init__(self):
        if not self.relative_tolerance > 0:
            raise InvalidInputError("relative_tolerance must be > 0")
        if self.nodes_per_panel < 2:
            raise InvalidInputError("nodes_per_panel must be >= 2")
        if self.max_panels < 1:
            raise InvalidInputError("max_panels must be >= 1")
        if self.phi_nodes < 4 or self.phi_nodes % 2:
            raise InvalidInputError("phi_nodes must be an even number >= 4")

    def seed_panels(self, oscillation: float | None = None) -> int:
        osc = self.oscillation_scale if oscillation is None else oscillation
        return max(1, min(self.max_panels, math.ceil(abs(osc) / math.pi)))


DEFAULT_SPEC = QuadratureSpec()


@lru_cache(maxsize=64)
def _legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(a: float, b: float, n_panels: int, nodes_per_panel: int):
    """Nodes and weights of the composite Gauss-Legendre rule on ``[a, b]``."""
    x, w = _legendre(nodes_per_panel)
    edges = np.linspace(a, b, n_panels + 1)
    lo = edges[:-1, None]
    hi = edges[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (half * x + 0.5 * (lo + hi)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def periodic_nodes(n: int) -> np.ndarray:
    return TWO_PI * np.arange(n) / n


def phase_variation(phase, a: float, b: float, n_samples: int = 2049,
                    phi_samples: int = 16) -> float:
    """Largest total variation of an analytic phase along ``rho`` over ``phi``.

    ``phase(rho, phi)`` must be the unwrapped phase (rad) of the integrand;
    the result feeds :meth:`QuadratureSpec.seed_panels`.
    """
    rho = np.linspace(a, b, n_samples)[:, None]
    phi = periodic_nodes(phi_samples)[None, :]
    values = np.broadcast_to(phase(rho, phi), (n_samples, phi_samples))
    return float(np.max(np.sum(np.abs(np.diff(values, axis=0)), axis=0)))


def _close(new, old, l1, rtol) -> bool:
    diff = float(np.linalg.norm(np.ravel(new - old)))
    scale = float(np.linalg.norm(np.ravel(new)))
    return diff <= rtol * scale or diff <= _ROUNDOFF * l1


def _radial_sum(f, a, b, n_panels, nodes_per_panel):
    total = 0.0
    l1 = 0.0
    chunk = max(1, _CHUNK_NODES // nodes_per_panel)
    edges = np.linspace(a, b, n_panels + 1)
    for start in range(0, n_panels, chunk):
        stop = min(n_panels, start + chunk)
        nodes, weights = panel_rule(edges[start], edges[stop], stop - start, nodes_per_panel)
        values = np.asarray(f(nodes))
        total = total + values @ weights
        l1 += float(np.sum(np.abs(values) @ weights))
    return total, l1


def integrate_radial(f, a: float, b: float, spec: QuadratureSpec = DEFAULT_SPEC,
                     oscillation: float | None = None):
    """Integrate ``f`` over ``[a, b]`` with doubling composite Gauss-Legendre.

    Parameters
    ----------
    f : callable
        Vectorized integrand, see module docstring.
    a, b : float
        Finite interval with ``a < b``.
    spec : QuadratureSpec
        Tolerance and limits.
    oscillation : float, optional
        Phase variation of ``f`` over ``[a, b]`` (rad).  Defaults to
        ``spec.oscillation_scale``.

    Raises
    ------
    ConvergenceError
        When ``spec.max_panels`` is reached before two estimates agree.
    """
    if not a < b:
        raise InvalidInputError(f"integrate_radial needs a < b, got [{a}, {b}]")
    panels = spec.seed_panels(oscillation)
    previous, _ = _radial_sum(f, a, b, panels, spec.nodes_per_panel)
    older = None
    while True:
        panels *= 2
        if panels > spec.max_panels:
            raise ConvergenceError(
                f"radial quadrature did not converge within {spec.max_panels} panels",
                (older, previous))
        current, l1 = _radial_sum(f, a, b, panels, spec.nodes_per_panel)
        if _close(current, previous, l1, spec.relative_tolerance):
            return _scalarize(current)
        older, previous = previous, current


def integrate_periodic(f, n_nodes: int = 64, relative_tolerance: float = 1e-8,
                       max_nodes: int = 2 ** 14):
    """Trapezoid rule over one period ``[0, 2pi)`` with node doubling.

    The estimate on ``n`` nodes is accepted once it agrees with the estimate
    on its even half to ``relative_tolerance``.
    """
    n = int(n_nodes)
    if n < 2:
        raise InvalidInputError("integrate_periodic needs at least 2 nodes")
    n += n % 2
    while True:
        values = np.asarray(f(periodic_nodes(n)))
        full = values.sum(axis=-1) * (TWO_PI / n)
        half = values[..., ::2].sum(axis=-1) * (TWO_PI / (n // 2))
        l1 = float(np.sum(np.abs(values))) * (TWO_PI / n)
        if _close(full, half, l1, relative_tolerance):
            return _scalarize(full)
        n *= 2
        if n > max_nodes:
            raise ConvergenceError(
                f"periodic quadrature did not converge within {max_nodes} nodes", (half, full))


def _polar_sum(f, a, b, n_panels, nodes_per_panel, n_phi):
    """Tensor-rule sums on ``n_phi`` and on its even ``n_phi/2`` subset."""
    phi = periodic_nodes(n_phi)[None, :]
    chunk = max(1, _CHUNK_NODES // (nodes_per_panel * max(1, n_phi // 64)))
    edges = np.linspace(a, b, n_panels + 1)
    full = 0.0
    half = 0.0
    l1 = 0.0
    for start in range(0, n_panels, chunk):
        stop = min(n_panels, start + chunk)
        nodes, weights = panel_rule(edges[start], edges[stop], stop - start, nodes_per_panel)
        values = np.asarray(f(nodes[:, None], phi))
        values = np.broadcast_to(values, values.shape[:-2] + (nodes.size, n_phi))
        ring = values.sum(axis=-1)
        ring_half = values[..., ::2].sum(axis=-1)
        full = full + ring @ weights
        half = half + ring_half @ weights
        l1 += float(np.sum(np.abs(values).sum(axis=-1) @ weights))
    scale = TWO_PI / n_phi
    return full * scale, half * 2.0 * scale, l1 * scale


def refine_polar(summer, spec: QuadratureSpec, panels: int):
    """Drive a polar tensor rule to convergence.

    ``summer(n_panels, n_phi)`` returns ``(full, half, l1)``: the estimate,
    the estimate on the even half of the azimuthal nodes, and the L1 norm of
    the integrand.  The azimuthal count is doubled until ``full`` and
    ``half`` agree, then the radial panel count until successive estimates
    agree.
    """
    n_phi = spec.phi_nodes
    previous = None
    while True:
        full, half, l1 = summer(panels, n_phi)
        if not _close(full, half, l1, spec.relative_tolerance):
            n_phi *= 2
            if n_phi > spec.max_phi_nodes:
                raise ConvergenceError(
                    f"azimuthal quadrature did not converge within {spec.max_phi_nodes} nodes",
                    (half, full))
            previous = None
            continue
        if previous is not None and _close(full, previous, l1, spec.relative_tolerance):
            return full
        previous = full
        panels *= 2
        if panels > spec.max_panels:
            raise ConvergenceError(
                f"radial quadrature did not converge within {spec.max_panels} panels",
                (previous, full))


def integrate_2d_polar(f, a: float, b: float, spec: QuadratureSpec = DEFAULT_SPEC,
                       oscillation: float | None = None):
    """Integrate ``f(rho, phi)`` over the annulus ``a <= rho <= b``, full ``phi``.

    The measure is ``d rho d phi``; include the ``rho`` Jacobian in ``f``.
    Outer radial rule and inner trapezoid are both refined until converged;
    the result is deterministic for a fixed ``spec``.
    """
    if not a < b:
        raise InvalidInputError(f"integrate_2d_polar needs a < b, got [{a}, {b}]")

    def summer(panels, n_phi):
        return _polar_sum(f, a, b, panels, spec.nodes_per_panel, n_phi)

    return _scalarize(refine_polar(summer, spec, spec.seed_panels(oscillation)))


def _scalarize(value):
    value = np.asarray(value)
    if value.ndim == 0:
        return complex(value) if np.iscomplexobj(value) else float(value)
    return value
