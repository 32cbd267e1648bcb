"""Pure-numpy Euler-Maruyama stepping kernel (fallback for the compiled one).

Kept arithmetically identical to the Cython version so both paths produce the
same trajectories from the same draws.
"""

import numpy as np


def em_step(wealth, mu_bins, sig2_bins, lo, bin_width, dt, draws,
            w_min, w_max, reflect_lower=False):
    """Advance wealth in place by one Euler-Maruyama step.

    Drift and diffusion are linear-scale per-bin values interpolated linearly
    in asinh coordinates between bin centers, constant beyond the end bins.
    Returns (n_clamped_low, n_clamped_high).
    """
    n_bins = len(mu_bins)
    x = np.arcsinh(wealth)
    u = (x - lo) / bin_width - 0.5
    j = np.clip(np.floor(u), 0, n_bins - 2).astype(np.int64)
    frac = np.clip(u - j, 0.0, 1.0)
    mu = mu_bins[j] * (1.0 - frac) + mu_bins[j + 1] * frac
    sig2 = sig2_bins[j] * (1.0 - frac) + sig2_bins[j + 1] * frac

    w_new = wealth + mu * dt + np.sqrt(sig2 * dt) * draws
    if np.isnan(w_new).any():
        i = int(np.flatnonzero(np.isnan(w_new))[0])
        raise FloatingPointError(
            f"NaN wealth for particle {i} near bin {int(j[i])} "
            f"(mu={mu[i]!r}, sig2={sig2[i]!r})")

    low = w_new < w_min
    if reflect_lower:
        w_new[low] = np.maximum(2.0 * w_min - w_new[low], w_min)
    else:
        w_new[low] = w_min
    high = ~low & (w_new > w_max)
    w_new[high] = w_max
    wealth[:] = w_new
    return int(low.sum()), int(high.sum())


COMPILED = False
