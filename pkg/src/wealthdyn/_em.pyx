# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Euler-Maruyama stepping kernel.

Arithmetic mirrors _em_np.em_step exactly; see that module for semantics.
"""

from libc.math cimport asinh, floor, isnan, sqrt

import numpy as np


def em_step(double[::1] wealth, double[::1] mu_bins, double[::1] sig2_bins,
            double lo, double bin_width, double dt, double[::1] draws,
            double w_min, double w_max, bint reflect_lower=False):
    cdef Py_ssize_t n = wealth.shape[0]
    cdef Py_ssize_t n_bins = mu_bins.shape[0]
    cdef Py_ssize_t i, j
    cdef double x, u, frac, mu, sig2, w_new
    cdef long n_low = 0, n_high = 0

    for i in range(n):
        x = asinh(wealth[i])
        u = (x - lo) / bin_width - 0.5
        j = <Py_ssize_t>floor(u)
        if j < 0:
            j = 0
        elif j > n_bins - 2:
            j = n_bins - 2
        frac = u - j
        if frac < 0.0:
            frac = 0.0
        elif frac > 1.0:
            frac = 1.0
        mu = mu_bins[j] * (1.0 - frac) + mu_bins[j + 1] * frac
        sig2 = sig2_bins[j] * (1.0 - frac) + sig2_bins[j + 1] * frac

        w_new = wealth[i] + mu * dt + sqrt(sig2 * dt) * draws[i]
        if isnan(w_new):
            raise FloatingPointError(
                f"NaN wealth for particle {i} near bin {j} (mu={mu!r}, sig2={sig2!r})")

        if w_new < w_min:
            if reflect_lower:
                w_new = 2.0 * w_min - w_new
                if w_new < w_min:
                    w_new = w_min
            else:
                w_new = w_min
            n_low += 1
        elif w_new > w_max:
            w_new = w_max
            n_high += 1
        wealth[i] = w_new
    return int(n_low), int(n_high)


COMPILED = True
