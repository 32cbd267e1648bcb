"""End-to-end estimation pipeline over a loaded panel."""

from __future__ import annotations

import numpy as np

from wealthdyn.estimator import (
    Bandwidths,
    ConsumptionProfile,
    PhasePanel,
    build_lhs,
    estimate_bootstrap_model,
    bootstrap,
    fit_panel,
)
from wealthdyn.grid import to_asinh_scale
from wealthdyn.io import Panel


def phase_panel_from_panel(panel: Panel, bandwidths: Bandwidths | None = None,
                           break_year=...) -> PhasePanel:
    """Assemble the phase series: transform income moments to the asinh scale
    and combine with the snapshots and event effects."""
    if break_year is ...:
        break_year = panel.break_year
    w = panel.grid.centers_wealth
    n_years = len(panel.years)
    z_t = np.empty((panel.grid.n_bins, n_years))
    psi2_t = np.empty_like(z_t)
    for k in range(n_years):
        z_t[:, k], psi2_t[:, k] = to_asinh_scale(panel.income_drift[k],
                                                 panel.income_diffusion[k], w)
    return build_lhs(panel.snapshots(), z_t, psi2_t,
                     effects_by_year=panel.effects_total(),
                     break_year=break_year, bandwidths=bandwidths)


def estimate_from_panel(panel: Panel, bandwidths: Bandwidths | None = None,
                        n_draws: int = 500,
                        rng: np.random.Generator | None = None,
                        break_year=...) -> tuple[ConsumptionProfile, PhasePanel]:
    """Panel -> phase series -> per-bin fits -> consumption profile with CIs."""
    if bandwidths is None:
        bandwidths = Bandwidths()
    if rng is None:
        rng = np.random.default_rng(0)
    phase = phase_panel_from_panel(panel, bandwidths, break_year)
    fits = fit_panel(phase, bandwidths)
    model = estimate_bootstrap_model(fits.residuals, n_draws=n_draws)
    profile = bootstrap(fits, model, rng, bandwidths.diffusion_derivative_asinh)
    return profile, phase
