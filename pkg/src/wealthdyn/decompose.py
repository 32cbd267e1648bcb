"""Growth decomposition, synthetic savings, counterfactual scenarios, and
phase-portrait emission.

Per-bin contributions follow the integrated density-evolution identity on the
linear wealth scale: quantile growth = drift + mobility gradient + mobility
level + event corrections. The headline "mobility" component is the level term
-sigma^2/2 * d log f / dw alone (on a Pareto tail with sigma^2 = s2 w^2 it
equals s2 (1+alpha)/2 of wealth); the gradient term is reported separately so
the components still sum to the total exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from wealthdyn.estimator import PanelFits, PhasePanel
from wealthdyn.events import EventEffects
from wealthdyn.grid import DistributionSnapshot, WealthGrid, log_density_slope
from wealthdyn.sde import DriftDiffusionProfile, SimulationConfig, simulate


def _log_density_slope_wealth(snapshot: DistributionSnapshot,
                              bandwidth: float = 0.3) -> np.ndarray:
    """d log f / dw on the linear scale from the asinh-scale slope."""
    slope_x = log_density_slope(snapshot, bandwidth)
    w = snapshot.grid.centers_wealth
    s2 = 1.0 + w**2
    return slope_x / np.sqrt(s2) - w / s2


@dataclass
class GrowthDecomposition:
    """Average growth rate of the top (1-p) group's wealth, by component."""

    p: float
    period: tuple
    demography: float
    inheritance: float
    marriage_divorce: float
    drift: dict            # labeled income pieces and "consumption"
    mobility_gradient: dict  # {"income", "consumption"}
    mobility: dict           # {"income", "consumption"}
    total: float

    def component_sum(self) -> float:
        return (self.demography + self.inheritance + self.marriage_divorce
                + sum(self.drift.values()) + sum(self.mobility_gradient.values())
                + sum(self.mobility.values()))


def _group_weights(snapshot: DistributionSnapshot, p: float) -> np.ndarray:
    """Population mass of each bin inside the top (1-p) group (partial bin split)."""
    cdf = snapshot.cdf
    mass = snapshot.mass.copy()
    k = int(np.searchsorted(cdf, p))
    weights = np.zeros_like(mass)
    if k >= len(mass):
        raise ValueError("quantile above grid support")
    frac_above = (cdf[k] - p) / mass[k] if mass[k] > 0 else 0.0
    weights[k] = mass[k] * frac_above
    weights[k + 1:] = mass[k + 1:]
    return weights


def decompose_growth(snapshot: DistributionSnapshot, profile: DriftDiffusionProfile,
                     effects: EventEffects | None, p: float,
                     period: tuple = (0.0, 0.0),
                     income_components: dict | None = None,
                     slope_bandwidth: float = 0.3,
                     dlogf=None) -> GrowthDecomposition:
    """Decompose the growth rate of the top (1-p) group's average wealth.

    Components are wealth-weighted averages of the per-bin terms above the
    p-quantile, expressed per unit of the group's wealth (a rate per year).
    `dlogf` optionally supplies an analytic d log f / dw per bin.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    grid = snapshot.grid
    w = grid.centers_wealth
    weights = _group_weights(snapshot, p)
    if weights.sum() <= 0 or not np.any(weights[np.isfinite(w)] > 0):
        raise ValueError("no populated bins above the quantile")

    if dlogf is None:
        dlogf = _log_density_slope_wealth(snapshot, slope_bandwidth)
    dens_w = snapshot.density_wealth

    if income_components is None:
        income_components = {"income": profile.income_drift}
    psi2 = profile.income_diffusion
    g2 = profile.consumption_var
    dpsi2 = np.gradient(psi2, w)
    dg2 = np.gradient(g2, w)

    per_bin = {
        "demography": np.zeros(grid.n_bins),
        "inheritance": np.zeros(grid.n_bins),
        "marriage_divorce": np.zeros(grid.n_bins),
    }
    if effects is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            per_bin["demography"] = np.where(dens_w > 0, effects.Z / dens_w, 0.0)
            per_bin["inheritance"] = np.where(dens_w > 0, effects.Xi / dens_w, 0.0)
            per_bin["marriage_divorce"] = np.where(dens_w > 0, effects.X / dens_w, 0.0)

    drift_bins = {name: np.asarray(vals, dtype=float)
                  for name, vals in income_components.items()}
    drift_bins["consumption"] = -profile.consumption_mean
    grad_bins = {"income": -0.5 * dpsi2, "consumption": -0.5 * dg2}
    level_bins = {"income": -0.5 * psi2 * dlogf, "consumption": -0.5 * g2 * dlogf}

    group_wealth = float(np.sum(weights * w))
    if group_wealth <= 0:
        raise ValueError("group wealth must be positive")

    def agg(vals):
        vals = np.where(np.isfinite(vals), vals, 0.0)
        return float(np.sum(weights * vals) / group_wealth)

    dec = GrowthDecomposition(
        p=p, period=period,
        demography=agg(per_bin["demography"]),
        inheritance=agg(per_bin["inheritance"]),
        marriage_divorce=agg(per_bin["marriage_divorce"]),
        drift={k: agg(v) for k, v in drift_bins.items()},
        mobility_gradient={k: agg(v) for k, v in grad_bins.items()},
        mobility={k: agg(v) for k, v in level_bins.items()},
        total=0.0,
    )
    dec.total = dec.component_sum()
    return dec


@dataclass
class SyntheticSavings:
    """Quantile-motion saving measure and its drift/mobility split."""

    quantiles: np.ndarray
    wealth_at_quantiles: np.ndarray     # (n_snapshots, n_quantiles)
    mu_tilde: np.ndarray
    drift_part: np.ndarray
    mobility_part: np.ndarray
    times: np.ndarray


def synthetic_savings(snapshots: list[DistributionSnapshot],
                      profile: DriftDiffusionProfile,
                      quantiles=(0.1, 0.25, 0.5, 0.75, 0.9),
                      slope_bandwidth: float = 0.3) -> SyntheticSavings:
    """mu~(w) = mu(w) - sigma^2(w)/2 * d log f/dw, evaluated at quantiles.

    The quantile-motion identity dQ_p/dt = mu~(Q_p) conflates true drift with
    the mobility term; both parts are reported separately.
    """
    if len(snapshots) < 2:
        raise ValueError("need at least two snapshots")
    quantiles = np.asarray(quantiles, dtype=float)
    grid = snapshots[0].grid
    w = grid.centers_wealth
    mu = profile.drift()
    sig2 = profile.diffusion()
    n_s, n_q = len(snapshots), len(quantiles)
    w_q = np.empty((n_s, n_q))
    mu_t = np.empty((n_s, n_q))
    drift_p = np.empty((n_s, n_q))
    mob_p = np.empty((n_s, n_q))
    for s, snap in enumerate(snapshots):
        dlogf = _log_density_slope_wealth(snap, slope_bandwidth)
        mob_bins = -0.5 * sig2 * dlogf
        cdf = snap.cdf_at_centers
        for q, pq in enumerate(quantiles):
            w_q[s, q] = np.interp(pq, cdf, w)
            drift_p[s, q] = np.interp(pq, cdf, mu)
            ok = np.isfinite(mob_bins)
            mob_p[s, q] = np.interp(pq, cdf[ok], mob_bins[ok])
            mu_t[s, q] = drift_p[s, q] + mob_p[s, q]
    return SyntheticSavings(quantiles, w_q, mu_t, drift_p, mob_p,
                            np.array([s.time for s in snapshots]))


def top_share(snapshot: DistributionSnapshot, p: float, interpolate: bool = False) -> float:
    """Share of total wealth held at or above the p-quantile.

    Within-bin mass is uniform on the asinh coordinate, so bin wealth
    integrals are exact cosh differences. By default the whole quantile bin is
    included (the generalized inverse at bin resolution, so a single-atom
    distribution yields 1 for every p < 1); interpolate=True splits the
    quantile bin for smooth time series on continuous data.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    grid = snapshot.grid
    mass = snapshot.mass
    edges = grid.edges
    h = grid.bin_width
    bin_wealth = mass * (np.cosh(edges[1:]) - np.cosh(edges[:-1])) / h
    total = bin_wealth.sum()
    if total <= 0:
        raise ValueError("total wealth must be positive")
    cdf = snapshot.cdf
    k = int(np.searchsorted(cdf, p))
    if k >= grid.n_bins:
        return 0.0
    if not interpolate:
        return float(bin_wealth[k:].sum() / total)
    below = cdf[k] - mass[k]
    frac = (p - below) / mass[k] if mass[k] > 0 else 0.0
    x_split = edges[k] + frac * h
    partial = mass[k] * (np.cosh(edges[k + 1]) - np.cosh(x_split)) / h
    return float((partial + bin_wealth[k + 1:].sum()) / total)


def phase_portrait(panel: PhasePanel, fits: PanelFits | None = None) -> list[dict]:
    """Plot-ready phase records: one row per (bin, year) with the fitted line."""
    rows = []
    for i in range(panel.grid.n_bins):
        fit = fits.fits[i] if fits is not None else None
        for k, year in enumerate(panel.years):
            x, y = panel.x[i, k], panel.y[i, k]
            if not (np.isfinite(x) and np.isfinite(y)):
                continue
            fitted = np.nan
            if fit is not None:
                a = fit.intercepts.get(panel.period[k])
                if a is not None:
                    fitted = a + fit.slope * x
            rows.append({"bin": i, "center_asinh": float(panel.grid.centers[i]),
                         "year": float(year), "x": float(x), "y": float(y),
                         "fitted": float(fitted), "period": str(panel.period[k])})
    return rows


@dataclass
class Scenario:
    """Counterfactual overrides; unset fields leave the benchmark untouched.

    freeze_* replace the yearly input from `from_year` onward with its average
    over the reference window; scale_growth multiplies the growth-normalization
    drag on wealth by a constant factor from `from_year` onward.
    """

    name: str = "benchmark"
    from_year: float | None = None
    freeze_consumption: tuple | None = None     # (ref_start, ref_end)
    freeze_income_drift: tuple | None = None
    freeze_income_diffusion: tuple | None = None
    scale_growth: float | None = None
    freeze_estate_year: float | None = None
    freeze_demography_year: float | None = None

    def is_benchmark(self) -> bool:
        return (self.freeze_consumption is None and self.freeze_income_drift is None
                and self.freeze_income_diffusion is None and self.scale_growth is None
                and self.freeze_estate_year is None and self.freeze_demography_year is None)


def _window_mean(profiles_by_year: dict, field_name: str, window: tuple) -> np.ndarray:
    years = [y for y in profiles_by_year if window[0] <= y <= window[1]]
    if not years:
        raise ValueError(f"no profile years inside reference window {window}")
    return np.mean([getattr(profiles_by_year[y], field_name) for y in years], axis=0)


def scenario_profiles(profiles_by_year: dict, scenario: Scenario):
    """Year -> profile lookup with the scenario's overrides applied."""
    years = sorted(profiles_by_year)
    start = scenario.from_year if scenario.from_year is not None else -np.inf

    frozen = {}
    if scenario.freeze_consumption:
        frozen["consumption_mean"] = _window_mean(profiles_by_year, "consumption_mean",
                                                  scenario.freeze_consumption)
        frozen["consumption_var"] = _window_mean(profiles_by_year, "consumption_var",
                                                 scenario.freeze_consumption)
    if scenario.freeze_income_drift:
        frozen["income_drift"] = _window_mean(profiles_by_year, "income_drift",
                                              scenario.freeze_income_drift)
    if scenario.freeze_income_diffusion:
        frozen["income_diffusion"] = _window_mean(profiles_by_year, "income_diffusion",
                                                  scenario.freeze_income_diffusion)

    def lookup(t: float) -> DriftDiffusionProfile:
        yr = years[min(np.searchsorted(years, t, side="right") - 1, len(years) - 1)]
        yr = max(yr, years[0])
        prof = profiles_by_year[yr]
        if t < start or (not frozen and scenario.scale_growth is None):
            return prof
        kw = dict(income_drift=prof.income_drift, income_diffusion=prof.income_diffusion,
                  consumption_mean=prof.consumption_mean,
                  consumption_var=prof.consumption_var, growth_rate=prof.growth_rate)
        kw.update(frozen)
        if scenario.scale_growth is not None:
            extra = (scenario.scale_growth - 1.0) * prof.growth_rate
            kw["income_drift"] = kw["income_drift"] - extra * prof.grid.centers_wealth
            kw["growth_rate"] = prof.growth_rate * scenario.scale_growth
        return DriftDiffusionProfile(prof.grid, **kw)

    return lookup


def run_counterfactual(init, profiles_by_year: dict, scenario: Scenario,
                       config: SimulationConfig, p: float = 0.99,
                       tables=None, estate=None, inherit_model=None,
                       marriage_model=None, start_year: float | None = None):
    """Benchmark and counterfactual top-share paths under a common seed.

    Returns (years, benchmark_shares, counterfactual_shares).
    """
    if start_year is None:
        start_year = float(min(profiles_by_year))
    bench_fn = scenario_profiles(profiles_by_year, Scenario())
    alt_fn = scenario_profiles(profiles_by_year, scenario)

    estate_bench = estate
    estate_alt = estate
    if scenario.freeze_estate_year is not None and estate is not None:
        estate_alt = _frozen_estate(estate, scenario.freeze_estate_year)

    bench = simulate(init, bench_fn, config, tables=tables, estate=estate_bench,
                     inherit_model=inherit_model, marriage_model=marriage_model,
                     start_year=start_year)
    alt = simulate(init, alt_fn, config, tables=tables, estate=estate_alt,
                   inherit_model=inherit_model, marriage_model=marriage_model,
                   start_year=start_year)
    years = np.array([s.time for s in bench])
    return (years, np.array([top_share(s, p, interpolate=True) for s in bench]),
            np.array([top_share(s, p, interpolate=True) for s in alt]))


def _frozen_estate(estate, freeze_year: float):
    from wealthdyn.events import EstateTaxSchedule

    yi = estate.year_index(min(freeze_year, estate.years[-1]))
    brackets = [estate.brackets[min(k, yi)] for k in range(len(estate.years))]
    exemptions = np.where(estate.years <= freeze_year, estate.exemptions,
                          estate.exemptions[yi])
    return EstateTaxSchedule(estate.years.copy(), exemptions, brackets)
