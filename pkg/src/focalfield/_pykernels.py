"""Pure numpy tensor-rule sums for the detection-overlap integrals.

For an atom at ``(x, 0, z)`` and a lens-plane point ``(rho, phi)`` let
``s = sqrt(rho^2 + f^2)``, ``cos(theta) = f/s``, ``sin(theta) = rho/s``,
``zeta = 2f - z`` and

* ``R`` the distance from the atom to ``(rho, phi, 0)`` (focusing lens),
* ``r`` the distance from the atom to ``(rho, phi, 2f)`` (collecting lens).

The integrands, averaged over ``phi`` and integrated over ``rho``, are::

    I: rho z / sqrt(cos) exp(-rho^2/w^2) exp(ik(R - s)) / R^2 * W_I
    K: rho sqrt(cos) exp(-rho^2/w^2) exp(ik(s - r)) / r   * W_K

``form = 0`` uses the full polarization weights, obtained by projecting the
lens rotation and the dipole transverse projector onto ``x``::

    q_x = cos^2(phi) cos + sin^2(phi)
    W_I = 2 q_x
    W_K = 2 q_x - 2 (rho cos(phi) - x)(rho cos cos(phi) - x q_x - zeta sin cos(phi)) / r^2

``form = 1`` uses the azimuthally pre-averaged weights (``W_I = 1 + cos``
and the complex ``W_K`` bracket) that are exact only on the optical axis.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 4096


def tilde_sums(x, z, f, k, w, rho, wr, n_phi, form):
    """Return ``(I, K, I_half, K_half, l1_I, l1_K)`` for one tensor rule.

    ``I_half``/``K_half`` use the even subset of the ``n_phi`` azimuthal nodes.
    """
    rho = np.asarray(rho, dtype=float)
    wr = np.asarray(wr, dtype=float)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    cp = np.cos(phi)[None, :]
    sp = np.sin(phi)[None, :]
    c2p = np.cos(2.0 * phi)[None, :]
    zeta = 2.0 * f - z
    sums = np.zeros(6, dtype=complex)
    for start in range(0, rho.size, _CHUNK):
        r0 = rho[start:start + _CHUNK, None]
        wts = wr[start:start + _CHUNK]
        s = np.sqrt(r0 * r0 + f * f)
        c = f / s
        sn = r0 / s
        g = np.exp(-r0 * r0 / (w * w))
        amp_i = r0 * z / np.sqrt(c) * g
        amp_k = r0 * np.sqrt(c) * g

        big_r2 = x * x + r0 * r0 + z * z - 2.0 * x * r0 * cp
        wi = (1.0 + c) + (c - 1.0) * c2p if form == 0 else (1.0 + c) + 0.0 * cp
        ti = wi / big_r2 * np.exp(1j * (k * np.sqrt(big_r2) - k * s))

        r2 = x * x + zeta * zeta + r0 * r0 - 2.0 * r0 * x * cp
        small_r = np.sqrt(r2)
        if form == 0:
            qx = cp * cp * c + sp * sp
            wk = 2.0 * qx - 2.0 * (r0 * cp - x) * (r0 * c * cp - x * qx - zeta * sn * cp) / r2
        else:
            t = zeta * sn - c * (r0 - x * cp) + 1j * x * sp
            wk = 1.0 + c + r0 / r2 * t - x / (2.0 * r2) * t * (cp - 1j * sp)
        tk = wk * np.exp(1j * (k * s - k * small_r)) / small_r

        ai = (amp_i[:, 0] * wts)
        ak = (amp_k[:, 0] * wts)
        sums[0] += ai @ ti.sum(axis=1)
        sums[1] += ak @ tk.sum(axis=1)
        sums[2] += ai @ ti[:, ::2].sum(axis=1)
        sums[3] += ak @ tk[:, ::2].sum(axis=1)
        sums[4] += np.abs(ai) @ np.abs(ti).sum(axis=1)
        sums[5] += np.abs(ak) @ np.abs(tk).sum(axis=1)
    norm = 1.0 / n_phi
    return (complex(sums[0] * norm), complex(sums[1] * norm),
            complex(sums[2] * 2 * norm), complex(sums[3] * 2 * norm),
            float(sums[4].real * norm), float(sums[5].real * norm))
