"""Reference computations written independently of the package internals."""

from __future__ import annotations

import numpy as np

from focalfield.core import rotation_matrices


def paraxial_on_axis_amplitude(distance, waist, k, amplitude=1.0):
    """On-axis modulus of a collimated Gaussian beam after free propagation."""
    z_r = 0.5 * k * waist ** 2
    return amplitude / np.sqrt(1.0 + (distance / z_r) ** 2)


def tilde_brute_force(x_a, z_a, cfg, n_panels, n_phi, nodes_per_panel=32):
    """``(I, K)`` on a fixed dense tensor rule, with the polarization weights
    built from the lens rotation matrices and explicit geometry."""
    f = cfg.focal_length
    k = cfg.k
    w = cfg.beam_waist
    b = cfg.radial_cutoff
    x, wx = np.polynomial.legendre.leggauss(nodes_per_panel)
    edges = np.linspace(0.0, b, n_panels + 1)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    total_i = 0j
    total_k = 0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        rho = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        wr = 0.5 * (hi - lo) * wx
        rr, pp = np.meshgrid(rho, phi, indexing="ij")
        u = rotation_matrices(rr, pp, f)
        s = np.sqrt(rr ** 2 + f ** 2)
        c = f / s
        g = np.exp(-rr ** 2 / w ** 2)
        # focusing lens: x-component of U x
        big_r = np.sqrt((rr * np.cos(pp) - x_a) ** 2 + (rr * np.sin(pp)) ** 2 + z_a ** 2)
        w_i = 2.0 * u[0, 0]
        fi = rr * z_a / np.sqrt(c) * g * np.exp(1j * k * (big_r - s)) / big_r ** 2 * w_i
        # collecting lens: x-component of U (1 - r r) x
        vec = np.stack([rr * np.cos(pp) - x_a, rr * np.sin(pp), np.full(rr.shape, 2 * f - z_a)])
        r = np.sqrt(np.sum(vec ** 2, axis=0))
        rhat = vec / r
        proj_x = np.array([1.0, 0.0, 0.0])[:, None, None] - rhat * rhat[0]
        w_k = 2.0 * np.einsum("j...,j...->...", u[0], proj_x)
        fk = rr * np.sqrt(c) * g / r * np.exp(1j * k * (s - r)) * w_k
        total_i += np.sum(wr[:, None] * fi) / n_phi
        total_k += np.sum(wr[:, None] * fk) / n_phi
    return total_i, total_k
