import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from wealthdyn.fokker_planck import steady_state, tail_alpha
from wealthdyn.grid import DistributionSnapshot, WealthGrid
from wealthdyn.sde import DriftDiffusionProfile
from wealthdyn.tax import (
    EstateModel,
    TaxPolicy,
    estate_pareto_alpha,
    laffer_curve,
    laffer_point,
    mobility_weight,
    rebate_fixed_point,
    revenue_maximizing_rate,
    reweighting_factor,
    steady_state_with_tax,
    tax_comparison_curve,
)


def pareto_grid(w_b=1.0, upper=12.0, h=0.02):
    n = int(round((upper - float(np.arcsinh(w_b))) / h))
    return WealthGrid(lower_asinh=float(np.arcsinh(w_b)), bin_width=h, n_bins=n)


def pareto_snapshot(grid, alpha=1.5):
    w_edges = np.sinh(grid.edges)
    w_b = w_edges[0]
    mass = (w_edges[:-1] / w_b) ** (-alpha) - (w_edges[1:] / w_b) ** (-alpha)
    return DistributionSnapshot(0.0, grid, mass / mass.sum())


class TestTaxPolicy:
    def test_liability_piecewise_linear(self):
        pol = TaxPolicy([(10.0, 0.1), (100.0, 0.3)])
        assert pol.liability(5.0) == 0.0
        assert_allclose(pol.liability(50.0), 0.1 * 40.0)
        assert_allclose(pol.liability(200.0), 0.1 * 90.0 + 0.3 * 100.0)

    def test_marginal_rate_right_limit_at_kinks(self):
        pol = TaxPolicy([(10.0, 0.1), (100.0, 0.3)])
        assert pol.marginal_rate(10.0) == 0.1
        assert pol.marginal_rate(100.0) == 0.3

    def test_liability_below_wealth(self):
        pol = TaxPolicy([(0.0, 1.0)])
        w = np.linspace(0, 100, 50)
        assert np.all(pol.liability(w) <= w + 1e-12)

    def test_invalid_schedules_rejected(self):
        with pytest.raises(ValueError):
            TaxPolicy([(10.0, 0.5), (5.0, 0.2)])
        with pytest.raises(ValueError):
            TaxPolicy([(0.0, 1.5)])


class TestReweightingFactor:
    def test_no_tax_gives_unity(self):
        grid = pareto_grid()
        pol = TaxPolicy.linear_above(0.0, 50.0)
        theta = reweighting_factor(pol, lambda w: 0.16 * w**2, None, grid)
        assert_allclose(theta, 1.0, rtol=1e-14)

    def test_closed_form_linear_tax(self):
        # tau(w) = r (w - w0)+ with sigma = 0.4 w:
        # theta = exp{-(2r/s2)(w0/w - 1)} (w/w0)^(-2r/s2) above w0
        grid = pareto_grid()
        r, w0, s2 = 0.1, 50.0, 0.16
        pol = TaxPolicy.linear_above(r, w0)
        theta = reweighting_factor(pol, lambda w: s2 * w**2, None, grid)
        w = grid.centers_wealth
        above = w > w0
        expected = np.exp(-(2 * r / s2) * (w0 / w[above] - 1.0)) \
            * (w[above] / w0) ** (-2 * r / s2)
        assert_allclose(theta[above], expected, rtol=1e-6)
        assert_allclose(theta[~above], 1.0, rtol=1e-12)

    def test_quadruple_rate_double_sigma_invariance(self):
        grid = pareto_grid()
        t1 = reweighting_factor(TaxPolicy.linear_above(0.05, 50.0),
                                lambda w: 0.16 * w**2, None, grid)
        t2 = reweighting_factor(TaxPolicy.linear_above(0.20, 50.0),
                                lambda w: 0.64 * w**2, None, grid)
        assert np.array_equal(t1, t2)

    def test_matches_adaptive_quadrature_oracle(self):
        grid = pareto_grid(upper=9.0, h=0.05)
        r, w0 = 0.12, 20.0
        pol = TaxPolicy.linear_above(r, w0, epsilon=1.0, eta=1.0)
        sig2 = lambda w: 0.1 + 0.16 * np.asarray(w, dtype=float) ** 2
        c = lambda w: 0.06 * np.asarray(w, dtype=float)
        theta = reweighting_factor(pol, sig2, c, grid)
        w_min = grid.wealth_bounds[0]
        alpha = (1 - r) ** 1.0
        beta = (1 - r) ** -1.0
        for i in (160, 130, 100):
            wi = grid.centers_wealth[i]

            def integrand(s):
                tau = r * max(s - w0, 0.0)
                a = alpha if s > w0 else 1.0
                b = beta if s > w0 else 1.0
                return 2 * (tau * a + 0.06 * s * (b - 1.0)) / sig2(s)

            oracle, _ = quad(integrand, w_min, wi, points=[w0], limit=200)
            assert_allclose(theta[i], np.exp(-oracle), rtol=1e-8)

    def test_theta_nonincreasing(self):
        grid = pareto_grid()
        pol = TaxPolicy.linear_above(0.1, 30.0, epsilon=1.0, eta=1.0)
        theta = reweighting_factor(pol, lambda w: 0.16 * w**2,
                                   lambda w: 0.06 * np.asarray(w), grid)
        assert np.all(np.diff(theta) <= 1e-15)
        assert np.all((theta > 0) & (theta <= 1.0 + 1e-15))

    def test_avoidance_softens_erosion_consumption_hardens_it(self):
        grid = pareto_grid()
        sig2 = lambda w: 0.16 * np.asarray(w, dtype=float) ** 2
        c = lambda w: 0.06 * np.asarray(w, dtype=float)
        base = reweighting_factor(TaxPolicy.linear_above(0.2, 30.0), sig2, c, grid)
        avoid = reweighting_factor(TaxPolicy.linear_above(0.2, 30.0, epsilon=1.0),
                                   sig2, c, grid)
        consume = reweighting_factor(TaxPolicy.linear_above(0.2, 30.0, eta=1.0),
                                     sig2, c, grid)
        top = grid.centers_wealth > 30.0
        assert np.all(avoid[top] >= base[top])
        assert np.all(consume[top] <= base[top])

    def test_zero_mobility_under_tax_rejected(self):
        grid = pareto_grid(upper=9.0, h=0.05)
        pol = TaxPolicy.linear_above(0.1, 20.0)
        with pytest.raises(ValueError, match="zero mobility"):
            reweighting_factor(pol, np.zeros(grid.n_bins), None, grid)

    def test_array_and_callable_agree(self):
        grid = pareto_grid(upper=9.0, h=0.02)
        pol = TaxPolicy.linear_above(0.1, 20.0)
        sig2_arr = 0.16 * grid.centers_wealth**2
        t_arr = reweighting_factor(pol, sig2_arr, None, grid)
        t_fn = reweighting_factor(pol, lambda w: 0.16 * np.asarray(w) ** 2, None, grid)
        # the array path interpolates sigma^2 between bin centers: O(h^2) apart
        assert_allclose(t_arr, t_fn, rtol=5e-3)


class TestSteadyStateWithTax:
    def test_unity_theta_unchanged(self):
        grid = pareto_grid()
        snap = pareto_snapshot(grid)
        out = steady_state_with_tax(snap, np.ones(grid.n_bins))
        assert_allclose(out, snap.mass, rtol=1e-12)

    def test_pareto_tail_exponent_shift(self):
        # deep in the tail the taxed exponent is alpha + 2 tau/sigma^2
        grid = pareto_grid(upper=14.0)
        alpha, r, s2, w0 = 1.5, 0.02, 0.16, 20.0
        snap = pareto_snapshot(grid, alpha)
        theta = reweighting_factor(TaxPolicy.linear_above(r, w0),
                                   lambda w: s2 * w**2, None, grid)
        mass_after = steady_state_with_tax(snap, theta)
        after = DistributionSnapshot(0.0, grid, mass_after)
        a_hat = tail_alpha(after, tail_start=9.0)
        assert abs(a_hat - (alpha + 2 * r / s2)) < 0.05

    def test_zero_mass_rejected(self):
        grid = pareto_grid(upper=9.0, h=0.05)
        snap = pareto_snapshot(grid)
        with pytest.raises(ValueError):
            steady_state_with_tax(snap, np.zeros(grid.n_bins))


class TestLaffer:
    def test_zero_rate_zero_revenue(self):
        grid = pareto_grid()
        snap = pareto_snapshot(grid)
        out = laffer_point(TaxPolicy.linear_above(0.0, 50.0), snap,
                           lambda w: 0.16 * w**2, None)
        assert out.revenue_static == 0.0
        assert out.revenue_long_run == 0.0

    def test_mechanical_full_rate_keeps_positive_base(self):
        grid = pareto_grid()
        snap = pareto_snapshot(grid)
        out = laffer_point(TaxPolicy.linear_above(1.0, 50.0), snap,
                           lambda w: 0.16 * w**2, None)
        assert out.revenue_long_run > 0.0
        assert out.revenue_long_run < out.revenue_static

    def test_curve_shape(self):
        grid = pareto_grid()
        snap = pareto_snapshot(grid)
        rows = laffer_curve([0.0, 0.05, 0.2], 50.0, snap,
                            lambda w: 0.16 * w**2, lambda w: 0.06 * np.asarray(w),
                            epsilon=1.0, eta=1.0)
        rates, static, long_run = zip(*rows)
        assert static[0] == long_run[0] == 0.0
        assert all(l <= s + 1e-12 for s, l in zip(static[1:], long_run[1:]))


class TestRevenueMaximizingRate:
    def test_mechanical_regime_rejected(self):
        grid = pareto_grid()
        snap = pareto_snapshot(grid)
        with pytest.raises(ValueError, match="no interior maximum"):
            revenue_maximizing_rate(50.0, snap, lambda w: 0.16 * w**2, None,
                                    epsilon=0.0, eta=0.0)

    def test_huge_consumption_elasticity_pushes_rate_to_zero(self):
        grid = pareto_grid(upper=10.0, h=0.05)
        snap = pareto_snapshot(grid)
        best, _ = revenue_maximizing_rate(
            20.0, snap, lambda w: 0.16 * w**2, lambda w: 0.06 * np.asarray(w),
            epsilon=0.0, eta=50.0)
        assert best < 0.05


class TestRebate:
    def _setup(self, upper=10.0):
        grid = pareto_grid(w_b=0.5, upper=upper, h=0.05)
        snap = pareto_snapshot(grid, alpha=1.5)
        sig2 = lambda w: 0.05 + 0.16 * np.asarray(w, dtype=float) ** 2
        c = lambda w: 0.06 * np.asarray(w, dtype=float)
        return grid, snap, sig2, c

    def test_zero_tax_zero_rebate(self):
        grid, snap, sig2, c = self._setup()
        out = rebate_fixed_point(TaxPolicy.linear_above(0.0, 50.0), snap, sig2, c)
        assert out.rebate == 0.0
        assert_allclose(out.density_after, snap.mass / snap.mass.sum(), rtol=1e-12)

    def test_rebate_bounded_by_static_revenue(self):
        grid, snap, sig2, c = self._setup()
        pol = TaxPolicy.linear_above(0.12, 20.0, epsilon=1.0, eta=1.0)
        out = rebate_fixed_point(pol, snap, sig2, c)
        no_rebate = laffer_point(pol, snap, sig2, c)
        assert no_rebate.revenue_long_run - 1e-12 <= out.rebate <= out.revenue_static + 1e-12

    def test_fixed_point_consistency(self):
        grid, snap, sig2, c = self._setup()
        pol = TaxPolicy.linear_above(0.12, 20.0, epsilon=1.0, eta=1.0)
        out = rebate_fixed_point(pol, snap, sig2, c)
        w = grid.centers_wealth
        paid = pol.liability(w) * pol.avoidance_factor(w)
        assert_allclose(out.rebate, np.sum(out.density_after * paid), atol=1e-10)

    def test_bottom_share_rises_with_rebate(self):
        grid, snap, sig2, c = self._setup()
        pol = TaxPolicy.linear_above(0.12, 20.0, epsilon=1.0, eta=1.0)
        with_rebate = rebate_fixed_point(pol, snap, sig2, c)
        without = laffer_point(pol, snap, sig2, c)
        w_gain = grid.bin_wealth_widths()  # not needed beyond shares by mass rank

        def bottom_half_wealth_share(mass):
            wealth = mass * grid.centers_wealth
            cum = np.cumsum(mass)
            k = int(np.searchsorted(cum, 0.5))
            return wealth[: k + 1].sum() / wealth.sum()

        assert bottom_half_wealth_share(with_rebate.density_after) > \
            bottom_half_wealth_share(without.density_after)


class TestEstateModel:
    CAL = dict(drift=-0.04, sigma=0.4, death_rate=1.0 / 50.0)

    def test_alpha0_at_calibration(self):
        model = EstateModel(**self.CAL)
        assert_allclose(model.alpha_no_inheritance_tax(), 1.5, rtol=1e-14)
        assert abs(estate_pareto_alpha(model) - 1.5) < 1e-10

    def test_alpha1_closed_form_and_limit(self):
        model = EstateModel(**self.CAL)
        a1 = model.alpha_full_inheritance_tax()
        assert_allclose(a1, 0.5 * (1.5 + np.sqrt(1.5**2 + 8 * 0.02 / 0.16)), rtol=1e-14)
        assert_allclose(a1, 1.65139, atol=5e-6)
        near_full = EstateModel(estate_tax=1.0 - 1e-12, **self.CAL)
        assert abs(estate_pareto_alpha(near_full) - a1) < 1e-3

    def test_small_estate_tax_first_order_equivalence(self):
        chi = 1e-6
        a_estate = estate_pareto_alpha(EstateModel(estate_tax=chi, **self.CAL))
        a_annual = estate_pareto_alpha(EstateModel(annual_tax=chi, **self.CAL))
        assert abs(a_estate - a_annual) < 1e-4

    def test_annual_curve_exactly_linear(self):
        rates = np.linspace(0.0, 0.08, 9)
        annual, _ = tax_comparison_curve(EstateModel(**self.CAL), rates)
        slopes = np.diff(annual) / np.diff(rates)
        assert_allclose(slopes, 2.0 / 0.16, rtol=1e-9)

    def test_inheritance_curve_monotone_bounded(self):
        model = EstateModel(**self.CAL)
        rates = np.linspace(0.0, 1.0, 21)
        annual, inherit = tax_comparison_curve(model, rates)
        assert np.all(np.diff(inherit) >= -1e-9)  # saturates at float precision
        assert np.all(inherit <= model.alpha_full_inheritance_tax() + 1e-12)
        assert_allclose(annual[0], inherit[0], rtol=1e-12)
        # strictly increasing while the generational term is still unsaturated
        small = np.linspace(0.0, 0.02, 9)
        _, inherit_small = tax_comparison_curve(model, small)
        assert np.all(np.diff(inherit_small) > 0)

    def test_root_matches_closed_form_at_chi_zero(self):
        model = EstateModel(annual_tax=0.03, **self.CAL)
        assert abs(estate_pareto_alpha(model) - model.alpha_no_inheritance_tax()) < 1e-10

    def test_validation(self):
        with pytest.raises(ValueError):
            EstateModel(drift=0.5, sigma=0.4, death_rate=0.02)  # alpha0 < 1
        with pytest.raises(ValueError):
            EstateModel(drift=-0.04, sigma=0.0, death_rate=0.02)


class TestMobilityWeight:
    def test_log_lambda_matches_quadrature(self):
        grid = pareto_grid(w_b=0.5, upper=8.0, h=0.05)
        sig2 = lambda w: 0.05 + 0.16 * np.asarray(w, dtype=float) ** 2
        ll = mobility_weight(sig2, grid)
        w_min = grid.wealth_bounds[0]
        for i in (10, 60, 110):
            oracle, _ = quad(lambda s: 2.0 / sig2(s), w_min, grid.centers_wealth[i],
                             limit=200)
            assert_allclose(ll[i], oracle, rtol=1e-9)

    def test_degenerate_sigma_rejected(self):
        grid = pareto_grid(w_b=0.5, upper=8.0, h=0.05)
        with pytest.raises(ValueError):
            mobility_weight(np.zeros(grid.n_bins), grid)
