# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tensor-rule sums for the detection-overlap integrals.

Mirrors ``focalfield._pykernels.tilde_sums`` exactly; see that module for
the integrands.  Summation order is fixed (radial node outer, azimuthal node
inner), so results are reproducible run to run.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, fabs

cdef extern from "math.h" nogil:
    void sincos(double x, double *s, double *c)

cnp.import_array()


def tilde_sums(double x, double z, double f, double k, double w,
               const double[::1] rho, const double[::1] wr, int n_phi, int form):
    cdef Py_ssize_t n_r = rho.shape[0]
    cdef Py_ssize_t i, j
    cdef double zeta = 2.0 * f - z
    cdef double inv_w2 = 1.0 / (w * w)
    cdef double r0, s, c, sn, g, amp_i, amp_k, ph_s
    cdef double cp, sp, big_r, small_r, r2, wi, wk_re, wk_im, t_re, t_im, qx, a
    cdef double e_re, e_im, ti_re, ti_im, tk_re, tk_im
    cdef double ri_re, ri_im, rk_re, rk_im, hi_re, hi_im, hk_re, hk_im
    cdef double ai_re = 0, ai_im = 0, ak_re = 0, ak_im = 0
    cdef double bi_re = 0, bi_im = 0, bk_re = 0, bk_im = 0
    cdef double l1_i = 0, l1_k = 0, ring_l1_i, ring_l1_k
    cdef double x2 = x * x, z2 = z * z, zeta2 = zeta * zeta
    cdef double[::1] cosp = np.cos(2.0 * np.pi * np.arange(n_phi) / n_phi)
    cdef double[::1] sinp = np.sin(2.0 * np.pi * np.arange(n_phi) / n_phi)
    cdef double[::1] cos2p = np.cos(4.0 * np.pi * np.arange(n_phi) / n_phi)

    with nogil:
        for i in range(n_r):
            r0 = rho[i]
            s = sqrt(r0 * r0 + f * f)
            c = f / s
            sn = r0 / s
            g = exp(-r0 * r0 * inv_w2)
            amp_i = r0 * z / sqrt(c) * g
            amp_k = r0 * sqrt(c) * g
            ph_s = k * s
            ri_re = 0; ri_im = 0; rk_re = 0; rk_im = 0
            hi_re = 0; hi_im = 0; hk_re = 0; hk_im = 0
            ring_l1_i = 0; ring_l1_k = 0
            for j in range(n_phi):
                cp = cosp[j]
                sp = sinp[j]
                # focusing-lens term
                r2 = x2 + r0 * r0 + z2 - 2.0 * x * r0 * cp
                big_r = sqrt(r2)
                if form == 0:
                    wi = (1.0 + c) + (c - 1.0) * cos2p[j]
                else:
                    wi = 1.0 + c
                a = wi / r2
                sincos(k * big_r - ph_s, &e_im, &e_re)
                ti_re = a * e_re
                ti_im = a * e_im
                # collection-lens term
                r2 = x2 + zeta2 + r0 * r0 - 2.0 * r0 * x * cp
                small_r = sqrt(r2)
                if form == 0:
                    qx = cp * cp * c + sp * sp
                    wk_re = 2.0 * qx - 2.0 * (r0 * cp - x) * (r0 * c * cp - x * qx - zeta * sn * cp) / r2
                    wk_im = 0.0
                else:
                    t_re = zeta * sn - c * (r0 - x * cp)
                    t_im = x * sp
                    wk_re = 1.0 + c + r0 / r2 * t_re - x / (2.0 * r2) * (t_re * cp + t_im * sp)
                    wk_im = r0 / r2 * t_im - x / (2.0 * r2) * (t_im * cp - t_re * sp)
                sincos(ph_s - k * small_r, &e_im, &e_re)
                e_re = e_re / small_r
                e_im = e_im / small_r
                tk_re = wk_re * e_re - wk_im * e_im
                tk_im = wk_re * e_im + wk_im * e_re
                ri_re += ti_re
                ri_im += ti_im
                rk_re += tk_re
                rk_im += tk_im
                ring_l1_i += fabs(a)
                ring_l1_k += sqrt(wk_re * wk_re + wk_im * wk_im) / small_r
                if j % 2 == 0:
                    hi_re += ti_re
                    hi_im += ti_im
                    hk_re += tk_re
                    hk_im += tk_im
            ai_re += wr[i] * amp_i * ri_re
            ai_im += wr[i] * amp_i * ri_im
            ak_re += wr[i] * amp_k * rk_re
            ak_im += wr[i] * amp_k * rk_im
            bi_re += wr[i] * amp_i * hi_re
            bi_im += wr[i] * amp_i * hi_im
            bk_re += wr[i] * amp_k * hk_re
            bk_im += wr[i] * amp_k * hk_im
            l1_i += wr[i] * fabs(amp_i) * ring_l1_i
            l1_k += wr[i] * fabs(amp_k) * ring_l1_k

    cdef double norm = 1.0 / n_phi
    return (complex(ai_re * norm, ai_im * norm), complex(ak_re * norm, ak_im * norm),
            complex(bi_re * 2 * norm, bi_im * 2 * norm), complex(bk_re * 2 * norm, bk_im * 2 * norm),
            l1_i * norm, l1_k * norm)
