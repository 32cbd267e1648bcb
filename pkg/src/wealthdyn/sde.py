"""Particle-level forward simulation: Euler-Maruyama drift-diffusion stepping,
jump events (demography, inheritance, marriage/divorce), and the reduction of
heterogeneous micro-panels to wealth-conditional profiles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from wealthdyn import events as ev
from wealthdyn.grid import DistributionSnapshot, WealthGrid, build_histogram, to_asinh_scale
from wealthdyn.kernels import em_step
from wealthdyn.population import Particles, sample_wealth_from_snapshot


@dataclass
class DriftDiffusionProfile:
    """Per-bin conditional means and variances of income and consumption.

    All values are on the linear wealth scale at bin centers; income_drift is
    z(w) = y(w) + (r(w) - g) w (growth-normalized), consumption enters the
    total drift negatively.
    """

    grid: WealthGrid
    income_drift: np.ndarray
    income_diffusion: np.ndarray
    consumption_mean: np.ndarray
    consumption_var: np.ndarray
    growth_rate: float = 0.0

    def __post_init__(self):
        n = self.grid.n_bins
        for name in ("income_drift", "income_diffusion", "consumption_mean", "consumption_var"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape == ():
                arr = np.full(n, float(arr))
            if arr.shape != (n,):
                raise ValueError(f"{name} does not match grid")
            setattr(self, name, arr)
        if np.nanmin(self.income_diffusion) < 0 or np.nanmin(self.consumption_var) < 0:
            raise ValueError("diffusion terms must be nonnegative")

    @classmethod
    def from_total(cls, grid: WealthGrid, drift, diffusion, growth_rate: float = 0.0):
        """Profile with everything in the income slots (drift=z, diffusion=psi^2)."""
        return cls(grid, drift, diffusion, np.zeros(grid.n_bins), np.zeros(grid.n_bins),
                   growth_rate)

    @classmethod
    def from_callables(cls, grid: WealthGrid, mu: Callable, sigma2: Callable,
                       growth_rate: float = 0.0):
        w = grid.centers_wealth
        return cls.from_total(grid, np.asarray(mu(w), dtype=float),
                              np.asarray(sigma2(w), dtype=float), growth_rate)

    def drift(self) -> np.ndarray:
        """Total drift mu(w) = z(w) - c(w)."""
        return self.income_drift - self.consumption_mean

    def diffusion(self) -> np.ndarray:
        """Total diffusion sigma^2(w) = psi^2(w) + gamma^2(w)."""
        return self.income_diffusion + self.consumption_var

    def drift_diffusion_asinh(self) -> tuple[np.ndarray, np.ndarray]:
        """Total (drift, diffusion) mapped to the asinh scale at bin centers."""
        return to_asinh_scale(self.drift(), self.diffusion(), self.grid.centers_wealth)


@dataclass
class SimulationConfig:
    dt: float = 0.1
    horizon: float = 40.0
    n_particles: int = 100_000
    n_runs: int = 5
    rng_seed: int = 0
    demography: bool = False
    inheritance: bool = False
    marriage: bool = False
    output_interval: float = 1.0
    reflect_lower: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.n_runs % 2 == 0:
            raise ValueError("n_runs must be odd so the median is well-defined")


def step_drift_diffusion(particles: Particles | np.ndarray, profile: DriftDiffusionProfile,
                         dt: float, rng: np.random.Generator,
                         reflect_lower: bool = False) -> tuple[int, int]:
    """One Euler-Maruyama step; wealth outside the grid is clamped and counted."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    grid = profile.grid
    mu = np.ascontiguousarray(profile.drift())
    sig2 = np.ascontiguousarray(profile.diffusion())
    w_min, w_max = grid.wealth_bounds

    if isinstance(particles, Particles):
        idx = np.flatnonzero(particles.alive)
        buf = np.ascontiguousarray(particles.wealth[idx])
        draws = rng.standard_normal(len(buf))
        counts = em_step(buf, mu, sig2, grid.lower_asinh, grid.bin_width, dt, draws,
                         w_min, w_max, reflect_lower)
        particles.wealth[idx] = buf
        return counts
    wealth = particles
    draws = rng.standard_normal(len(wealth))
    return em_step(wealth, mu, sig2, grid.lower_asinh, grid.bin_width, dt, draws,
                   w_min, w_max, reflect_lower)


def euler_maruyama_paths(w0, mu_fn: Callable, sigma_fn: Callable, dt: float,
                         n_steps: int, rng: np.random.Generator) -> np.ndarray:
    """Grid-free particle paths for callable coefficients (no boundary handling)."""
    w = np.asarray(w0, dtype=float).copy()
    sqdt = np.sqrt(dt)
    for _ in range(n_steps):
        z = rng.standard_normal(len(w))
        w = w + mu_fn(w) * dt + sigma_fn(w) * sqdt * z
    return w


def _init_particles(init, n: int, rng: np.random.Generator, need_ages: bool) -> Particles:
    if isinstance(init, Particles):
        return init.copy()
    if isinstance(init, DistributionSnapshot):
        wealth = sample_wealth_from_snapshot(init, n, rng)
        age = rng.uniform(20.0, 80.0, size=n) if need_ages else np.full(n, 40.0)
        return Particles.singles(wealth, age=age, sex=rng.integers(0, 2, n).astype(np.int8))
    raise TypeError("init must be a DistributionSnapshot or Particles")


def _profile_at(profile, t: float) -> DriftDiffusionProfile:
    return profile(t) if callable(profile) else profile


def simulate(init, profile, config: SimulationConfig,
             tables: "ev.DemographyTables | None" = None,
             estate: "ev.EstateTaxSchedule | None" = None,
             inherit_model: "ev.InheritanceModel | None" = None,
             marriage_model: "ev.MarriageModel | None" = None,
             start_year: float = 0.0) -> list[DistributionSnapshot]:
    """Run n_runs seeds and report the per-bin median density at each output time.

    `profile` is a DriftDiffusionProfile or a callable t -> profile. Events run
    in fixed order each step (deaths/inheritance, births, marriages, divorces)
    before the drift-diffusion update.
    """
    grid = _profile_at(profile, start_year).grid
    events_on = config.demography or config.inheritance or config.marriage
    if events_on and tables is None:
        raise ValueError("event simulation requires demography tables")

    n_steps = int(round(config.horizon / config.dt))
    out_every = max(1, int(round(config.output_interval / config.dt)))
    out_steps = sorted(set(range(0, n_steps + 1, out_every)) | {n_steps})
    seeds = np.random.SeedSequence(config.rng_seed).spawn(config.n_runs)

    all_masses = []  # [run][output] -> mass vector
    out_times = [start_year + s * config.dt for s in out_steps]
    for run in range(config.n_runs):
        rng = np.random.default_rng(seeds[run])
        parts = _init_particles(init, config.n_particles, rng, events_on)
        masses = []
        for step in range(n_steps + 1):
            t = start_year + step * config.dt
            if step in out_steps:
                masses.append(parts.snapshot(grid, time=t).mass)
            if step == n_steps:
                break
            if events_on:
                ev.apply_events(
                    parts, tables, estate, inherit_model, marriage_model,
                    year=t, dt=config.dt, rng=rng,
                    demography=config.demography, inheritance=config.inheritance,
                    marriage=config.marriage)
            step_drift_diffusion(parts, _profile_at(profile, t), config.dt, rng,
                                 reflect_lower=config.reflect_lower)
        all_masses.append(masses)

    snapshots = []
    for k, t in enumerate(out_times):
        stack = np.stack([all_masses[r][k] for r in range(config.n_runs)])
        med = np.median(stack, axis=0)
        total = med.sum()
        if total > 0:
            med = med / total
        snapshots.append(DistributionSnapshot(t, grid, med))
    return snapshots


def gyongy_reduce(wealth, drift, diffusion, grid: WealthGrid,
                  min_count: int = 30) -> DriftDiffusionProfile:
    """Wealth-conditional means of per-particle drift and diffusion.

    The reduced diffusion is the conditional mean of individual diffusions
    E[sigma_i^2 | w] (not the variance of drifts). Starved bins are NaN.
    """
    wealth = np.asarray(wealth, dtype=float)
    drift = np.asarray(drift, dtype=float)
    diffusion = np.asarray(diffusion, dtype=float)
    if wealth.size == 0:
        raise ValueError("empty panel")
    idx = grid.bin_index(wealth)
    inside = (idx >= 0) & (idx < grid.n_bins)
    idx = idx[inside]
    counts = np.bincount(idx, minlength=grid.n_bins)
    mu = np.full(grid.n_bins, np.nan)
    sig2 = np.full(grid.n_bins, np.nan)
    ok = counts >= max(min_count, 1)
    with np.errstate(invalid="ignore"):
        sums_mu = np.bincount(idx, weights=drift[inside], minlength=grid.n_bins)
        sums_s2 = np.bincount(idx, weights=diffusion[inside], minlength=grid.n_bins)
    mu[ok] = sums_mu[ok] / counts[ok]
    sig2[ok] = sums_s2[ok] / counts[ok]
    return DriftDiffusionProfile.from_total(grid, mu, sig2)


def fill_profile_gaps(profile: DriftDiffusionProfile) -> DriftDiffusionProfile:
    """Interpolate NaN bins (nearest values at the ends) so a reduced profile
    can drive a simulation."""
    x = profile.grid.centers

    def _fill(a):
        a = a.copy()
        ok = np.isfinite(a)
        if not ok.any():
            raise ValueError("profile has no usable bins")
        a[~ok] = np.interp(x[~ok], x[ok], a[ok])
        return a

    return DriftDiffusionProfile(
        profile.grid, _fill(profile.income_drift), _fill(profile.income_diffusion),
        _fill(profile.consumption_mean), _fill(profile.consumption_var),
        profile.growth_rate)
