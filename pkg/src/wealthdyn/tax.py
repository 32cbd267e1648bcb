"""Long-run wealth-tax analysis.

The steady-state density under a wealth tax is the untaxed density reweighted
by theta(w) = exp{-2 int (tax-like drift reduction)/sigma^2}; behavioral
responses (avoidance alpha, consumption scaling beta) enter the integrand as
tau*alpha + c*(beta - 1). Laffer curves, revenue-maximizing rates, the
lump-sum-rebate fixed point, and a barrier-diffusion model comparing annual
and generational estate taxation all build on that factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from wealthdyn.fokker_planck import SteadyState
from wealthdyn.grid import DistributionSnapshot, WealthGrid

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


@dataclass
class TaxPolicy:
    """Piecewise-linear wealth tax with reduced-form behavioral elasticities.

    schedule is a sorted list of (threshold, marginal_rate): the marginal rate
    applies from its threshold up to the next one. At kinks the right-limit
    marginal rate applies. Liability tau(w) integrates the marginal rate from
    zero, so tau(w) <= w always.
    """

    schedule: list
    avoidance_elasticity: float = 0.0
    consumption_elasticity: float = 0.0

    def __post_init__(self):
        thresholds = [t for t, _ in self.schedule]
        if thresholds != sorted(thresholds):
            raise ValueError("schedule thresholds must be increasing")
        if any(not 0.0 <= r <= 1.0 for _, r in self.schedule):
            raise ValueError("marginal rates must lie in [0, 1]")
        if self.avoidance_elasticity < 0 or self.consumption_elasticity < 0:
            raise ValueError("elasticities must be nonnegative")
        self._thresholds = np.array(thresholds, dtype=float)
        self._rates = np.array([r for _, r in self.schedule], dtype=float)

    @classmethod
    def linear_above(cls, rate: float, threshold: float, epsilon: float = 0.0,
                     eta: float = 0.0) -> "TaxPolicy":
        return cls([(threshold, rate)], epsilon, eta)

    def marginal_rate(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        idx = np.searchsorted(self._thresholds, w, side="right") - 1
        out = np.where(idx >= 0, self._rates[np.clip(idx, 0, None)], 0.0)
        return out

    def liability(self, w) -> np.ndarray:
        """tau(w): integrated marginal schedule, zero for w at or below the
        first threshold."""
        w = np.asarray(w, dtype=float)
        out = np.zeros_like(w)
        for k, (lo, rate) in enumerate(self.schedule):
            hi = self.schedule[k + 1][0] if k + 1 < len(self.schedule) else np.inf
            out += rate * np.clip(w - lo, 0.0, hi - lo)
        return out

    def avoidance_factor(self, w) -> np.ndarray:
        """alpha(w) = (1 - tau'(w))^epsilon: reported fraction of wealth."""
        return (1.0 - self.marginal_rate(w)) ** self.avoidance_elasticity

    def consumption_factor(self, w) -> np.ndarray:
        """beta(w) = (1 - tau'(w))^(-eta): consumption scaling (capped to stay
        finite at a 100% marginal rate)."""
        net = np.maximum(1.0 - self.marginal_rate(w), 1e-12)
        return np.exp(np.minimum(-self.consumption_elasticity * np.log(net), 690.0))

    def kink_points(self) -> np.ndarray:
        return self._thresholds.copy()


def _as_function(values, grid: WealthGrid):
    """Per-bin array -> function of linear wealth (linear interp in asinh)."""
    if callable(values):
        return values
    arr = np.asarray(values, dtype=float)
    if arr.shape != (grid.n_bins,):
        raise ValueError("per-bin array does not match grid")
    centers = grid.centers

    def f(w):
        return np.interp(np.arcsinh(np.asarray(w, dtype=float)), centers, arr)

    return f


def _cumulative_integral(integrand, grid: WealthGrid, extra_knots=()) -> np.ndarray:
    """int_{w_min}^{center_i} integrand(s) ds by per-panel Gauss-Legendre.

    Panels are split at bin centers and at the supplied kink points so the
    quadrature never straddles a non-smooth point. The integrand is evaluated
    once on the flattened node lattice.
    """
    w_min, _ = grid.wealth_bounds
    knots = np.concatenate(([w_min], grid.centers_wealth))
    extra = [k for k in np.atleast_1d(extra_knots) if knots[0] < k < knots[-1]]
    all_knots = np.unique(np.concatenate([knots, extra]))
    mid = 0.5 * (all_knots[:-1] + all_knots[1:])
    half = 0.5 * np.diff(all_knots)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    values = np.asarray(integrand(nodes.ravel()), dtype=float).reshape(nodes.shape)
    panel_vals = half * (values @ _GL_WEIGHTS)
    cum_at_knots = np.concatenate(([0.0], np.cumsum(panel_vals)))
    positions = np.searchsorted(all_knots, grid.centers_wealth)
    return cum_at_knots[positions]


def reweighting_factor(policy: TaxPolicy, sigma2, c, grid: WealthGrid) -> np.ndarray:
    """theta(w) at bin centers: exp{-int 2[tau*alpha + c*(beta-1)]/sigma^2}.

    With both elasticities zero this is the purely mechanical factor
    exp{-int 2 tau/sigma^2}. sigma2 and c may be per-bin arrays or callables
    of linear wealth.
    """
    sig2_f = _as_function(sigma2, grid)
    c_f = _as_function(c if c is not None else np.zeros(grid.n_bins), grid)
    taxed_from = policy.kink_points()[0] if len(policy.schedule) else np.inf
    behavioral = policy.consumption_elasticity > 0

    w_probe = grid.centers_wealth
    active = (policy.liability(w_probe) > 0) | (behavioral & (w_probe > taxed_from))
    s2_probe = np.asarray(sig2_f(w_probe), dtype=float)
    if np.any(active & (s2_probe <= 0)):
        raise ValueError("zero mobility under tax: sigma^2 vanishes on a taxed bin")

    def integrand(s):
        s2 = np.asarray(sig2_f(s), dtype=float)
        tau_term = policy.liability(s) * policy.avoidance_factor(s)
        cons_term = np.asarray(c_f(s), dtype=float) * (policy.consumption_factor(s) - 1.0)
        total = tau_term + cons_term
        out = np.zeros_like(total)
        nz = total != 0
        out[nz] = 2.0 * total[nz] / s2[nz]
        return out

    log_theta = -_cumulative_integral(integrand, grid, policy.kink_points())
    return np.exp(log_theta)


def mobility_weight(sigma2, grid: WealthGrid) -> np.ndarray:
    """log lambda(w) = 2 int 1/sigma^2 ds, the lump-sum-rebate tilt exponent."""
    sig2_f = _as_function(sigma2, grid)
    s2_probe = np.asarray(sig2_f(grid.centers_wealth), dtype=float)
    if np.any(s2_probe <= 0):
        raise ValueError("sigma^2 must be positive on the grid interior")

    def integrand(s):
        return 2.0 / np.asarray(sig2_f(s), dtype=float)

    return _cumulative_integral(integrand, grid)


def _baseline_mass(baseline) -> tuple[WealthGrid, np.ndarray]:
    if isinstance(baseline, SteadyState):
        return baseline.grid, baseline.mass
    if isinstance(baseline, DistributionSnapshot):
        return baseline.grid, baseline.mass
    raise TypeError("baseline must be a SteadyState or DistributionSnapshot")


@dataclass
class TaxOutcome:
    grid: WealthGrid
    theta: np.ndarray
    density_after: np.ndarray         # per-bin mass, normalized
    revenue_static: float
    revenue_long_run: float
    rebate: float | None = None


def steady_state_with_tax(baseline, theta: np.ndarray) -> np.ndarray:
    """Taxed steady-state mass: pointwise product theta * f, renormalized."""
    grid, mass = _baseline_mass(baseline)
    out = mass * np.asarray(theta, dtype=float)
    total = out.sum()
    if total <= 0:
        raise ValueError("reweighting annihilated all mass")
    return out / total


def laffer_point(policy: TaxPolicy, baseline, sigma2, c) -> TaxOutcome:
    """Static and long-run revenue (per capita, average-income units per year)."""
    grid, mass = _baseline_mass(baseline)
    w = grid.centers_wealth
    paid = policy.liability(w) * policy.avoidance_factor(w)
    revenue_static = float(np.sum(mass * paid))
    theta = reweighting_factor(policy, sigma2, c, grid)
    mass_after = steady_state_with_tax(baseline, theta)
    revenue_long = float(np.sum(mass_after * paid))
    return TaxOutcome(grid, theta, mass_after, revenue_static, revenue_long)


def laffer_curve(rates, threshold: float, baseline, sigma2, c,
                 epsilon: float = 0.0, eta: float = 0.0):
    """Revenue curve for a linear tax above a threshold over a grid of rates."""
    rows = []
    for rate in np.atleast_1d(rates):
        pol = TaxPolicy.linear_above(float(rate), threshold, epsilon, eta)
        out = laffer_point(pol, baseline, sigma2, c)
        rows.append((float(rate), out.revenue_static, out.revenue_long_run))
    return rows


_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def revenue_maximizing_rate(threshold: float, baseline, sigma2, c,
                            epsilon: float, eta: float,
                            coarse: int = 21, tol: float = 1e-4):
    """Rate maximizing long-run revenue for a linear tax above the threshold.

    A coarse bracketing grid finds an interior maximum, then golden-section
    search refines it. A monotone curve (the mechanical regime) is an error.
    """
    def revenue(rate):
        pol = TaxPolicy.linear_above(rate, threshold, epsilon, eta)
        return laffer_point(pol, baseline, sigma2, c).revenue_long_run

    grid_rates = np.linspace(0.0, 1.0, coarse)
    values = np.array([revenue(r) for r in grid_rates])
    k = int(np.argmax(values))
    if k == len(values) - 1 or (k == 0 and values[0] >= values.max()):
        raise ValueError("no interior maximum (mechanical regime)")
    lo, hi = grid_rates[k - 1] if k > 0 else 0.0, grid_rates[k + 1]

    a, b = lo, hi
    m1 = b - _GOLDEN * (b - a)
    m2 = a + _GOLDEN * (b - a)
    f1, f2 = revenue(m1), revenue(m2)
    while b - a > tol:
        if f1 > f2:
            b, m2, f2 = m2, m1, f1
            m1 = b - _GOLDEN * (b - a)
            f1 = revenue(m1)
        else:
            a, m1, f1 = m1, m2, f2
            m2 = a + _GOLDEN * (b - a)
            f2 = revenue(m2)
    best = 0.5 * (a + b)
    return best, list(zip(grid_rates.tolist(), values.tolist()))


def rebate_fixed_point(policy: TaxPolicy, baseline, sigma2, c) -> TaxOutcome:
    """Lump-sum rebate equilibrium.

    The rebated steady state is proportional to theta(w) lambda(w)^rebate f(w);
    the rebate solves rebate = average tax collected on that density.
    """
    grid, mass = _baseline_mass(baseline)
    w = grid.centers_wealth
    theta = reweighting_factor(policy, sigma2, c, grid)
    log_lambda = mobility_weight(sigma2, grid)
    paid = policy.liability(w) * policy.avoidance_factor(w)
    log_theta = np.log(np.maximum(theta, 1e-300))

    def rebated_mass(rb):
        ex = log_theta + rb * log_lambda
        ex -= ex.max()
        m = mass * np.exp(ex)
        return m / m.sum()

    def gap(rb):
        return rb - float(np.sum(rebated_mass(rb) * paid))

    hi = float(paid.max()) + 1e-12
    if gap(0.0) >= 0.0:
        rebate = 0.0
    else:
        rebate = float(brentq(gap, 0.0, hi, xtol=1e-12, maxiter=200))
    m_after = rebated_mass(rebate)
    return TaxOutcome(grid, theta, m_after, float(np.sum(mass * paid)),
                      float(np.sum(m_after * paid)), rebate=rebate)


@dataclass
class EstateModel:
    """Barrier-diffusion wealth model with Poisson deaths and generational
    transfer, for comparing annual and inheritance taxation."""

    drift: float                  # proportional wealth growth rate, no tax
    sigma: float                  # proportional diffusion rate
    death_rate: float             # Poisson rate of generational turnover
    barrier: float = 1.0
    annual_tax: float = 0.0
    estate_tax: float = 0.0       # generational rate chi in [0, 1]

    def __post_init__(self):
        if self.sigma <= 0 or self.death_rate <= 0:
            raise ValueError("sigma and death_rate must be positive")
        if not 0.0 <= self.estate_tax <= 1.0:
            raise ValueError("estate tax rate must lie in [0, 1]")
        if self.alpha_no_inheritance_tax() <= 1.0:
            raise ValueError("model does not admit a normalizable Pareto tail")

    def alpha_no_inheritance_tax(self) -> float:
        """alpha_0 = 1 - 2(drift - annual_tax)/sigma^2."""
        return 1.0 - 2.0 * (self.drift - self.annual_tax) / self.sigma**2

    def alpha_full_inheritance_tax(self) -> float:
        """Limit of the tail exponent as the estate tax goes to 100%."""
        a0 = self.alpha_no_inheritance_tax()
        return 0.5 * (a0 + np.sqrt(a0**2 + 8.0 * self.death_rate / self.sigma**2))


def estate_pareto_alpha(model: EstateModel) -> float:
    """Tail exponent solving the stationarity condition of the estate model:
    0 = drift + (alpha-1) sigma^2/2 - tau - (delta/alpha)[1 - (1-chi)^(alpha/delta)].
    """
    mu, s2 = model.drift, model.sigma**2
    tau, chi, delta = model.annual_tax, model.estate_tax, model.death_rate
    if chi >= 1.0:
        return float(model.alpha_full_inheritance_tax())

    def g(alpha):
        gen = 0.0
        if chi > 0:
            gen = (delta / alpha) * -np.expm1((alpha / delta) * np.log1p(-chi))
        return mu + 0.5 * (alpha - 1.0) * s2 - tau - gen

    lo, hi = 1.0 + 1e-12, 50.0
    if g(lo) > 0 or g(hi) < 0:
        raise ValueError("no root in (1, 50] for the tail exponent")
    return float(brentq(g, lo, hi, xtol=1e-14, maxiter=200))


def tax_comparison_curve(model: EstateModel, rates):
    """Tail exponent under an annual wealth tax vs an inheritance tax.

    Returns (alpha_annual, alpha_inheritance) arrays over `rates`: the annual
    curve is exactly linear with slope 2/sigma^2; the inheritance curve
    asymptotes to the full-tax limit.
    """
    rates = np.atleast_1d(np.asarray(rates, dtype=float))
    if np.any((rates < 0) | (rates > 1)):
        raise ValueError("rates must lie in [0, 1]")
    base = dict(drift=model.drift, sigma=model.sigma, death_rate=model.death_rate,
                barrier=model.barrier)
    annual = np.array([estate_pareto_alpha(EstateModel(annual_tax=r, **base))
                       for r in rates])
    inherit = np.array([estate_pareto_alpha(EstateModel(estate_tax=r, **base))
                        for r in rates])
    return annual, inherit
