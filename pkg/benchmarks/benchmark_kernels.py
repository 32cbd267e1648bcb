"""Compare the compiled particle-stepping kernel against the numpy fallback.

Run: python benchmarks/benchmark_kernels.py [n_particles] [n_steps]
"""

import sys
import time

import numpy as np

from wealthdyn import _em_np
from wealthdyn.grid import WealthGrid
from wealthdyn.synth import default_economy

try:
    from wealthdyn import _em

    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False


def run(kernel, wealth, mu, sig2, grid, dt, steps, rng):
    w = wealth.copy()
    w_min, w_max = grid.wealth_bounds
    t0 = time.perf_counter()
    for _ in range(steps):
        kernel.em_step(w, mu, sig2, grid.lower_asinh, grid.bin_width, dt,
                       rng.standard_normal(len(w)), w_min, w_max, False)
    return time.perf_counter() - t0, w


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
    steps = int(sys.argv[2]) if len(sys.argv) > 2 else 200
    grid = WealthGrid.default()
    profile = default_economy(grid)
    mu = np.ascontiguousarray(profile.drift())
    sig2 = np.ascontiguousarray(profile.diffusion())
    rng = np.random.default_rng(0)
    wealth = np.sinh(rng.uniform(0.0, 3.0, n))

    t_np, w_np = run(_em_np, wealth, mu, sig2, grid, 0.05, steps, np.random.default_rng(1))
    rate_np = n * steps / t_np / 1e6
    print(f"numpy fallback : {t_np:7.2f}s  ({rate_np:6.1f} M particle-steps/s)")
    if HAVE_COMPILED:
        t_c, w_c = run(_em, wealth, mu, sig2, grid, 0.05, steps, np.random.default_rng(1))
        rate_c = n * steps / t_c / 1e6
        print(f"compiled kernel: {t_c:7.2f}s  ({rate_c:6.1f} M particle-steps/s)")
        print(f"speedup: {t_np / t_c:.2f}x")
        agree = np.allclose(w_np, w_c, rtol=1e-13)
        print(f"trajectories agree (same draws): {agree}")
    else:
        print("compiled kernel: not built (pip install -e . --no-build-isolation)")


if __name__ == "__main__":
    main()
