import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.optimize import minimize

from wealthdyn.estimator import (
    Bandwidths,
    BootstrapModel,
    PhasePanel,
    bootstrap,
    build_covariance,
    build_lhs,
    deming_fit,
    estimate_bootstrap_model,
    estimate_delta,
    fit_panel,
    recover_consumption,
    sample_noise,
)
from wealthdyn.grid import DistributionSnapshot, WealthGrid, consumption_from_asinh


class TestDemingFit:
    def test_collinear_is_delta_invariant(self):
        x = np.linspace(-3, 5, 30)
        y = 2.0 - 0.5 * x
        for delta in (1e-6, 1e-2, 1.0, 1e3):
            fit = deming_fit(x, y, delta)
            assert_allclose(fit.slope, -0.5, rtol=1e-12)
            assert_allclose(fit.intercepts["all"], 2.0, rtol=1e-12)
            assert_allclose(fit.residuals, 0.0, atol=1e-12)

    def test_limits_towards_both_ols_directions(self):
        # delta -> inf pins x* = x (OLS of y on x); delta -> 0 frees x*
        # (OLS with the sides reversed)
        rng = np.random.default_rng(0)
        x = rng.normal(0, 1, 200)
        y = 1.0 + 0.8 * x + rng.normal(0, 0.5, 200)
        sxx = np.var(x)
        sxy = np.mean((x - x.mean()) * (y - y.mean()))
        syy = np.var(y)
        assert_allclose(deming_fit(x, y, 1e8).slope, sxy / sxx, rtol=1e-6)
        assert_allclose(deming_fit(x, y, 1e-8).slope, syy / sxy, rtol=1e-6)

    def test_closed_form_matches_brute_force(self):
        # joint numerical minimization over (a, b, x*_1..n)
        rng = np.random.default_rng(7)
        for seed in range(3):
            r = np.random.default_rng(seed)
            n = 50
            x = r.normal(0, 1, n)
            y = 0.5 - 1.2 * x + r.normal(0, 0.3, n)
            delta = 1.0
            fit = deming_fit(x, y, delta)

            def objective(p):
                a, b = p[0], p[1]
                xs = p[2:]
                return np.sum((y - a - b * xs) ** 2 + delta * (x - xs) ** 2)

            start = np.concatenate([[y.mean(), -1.0], x])
            sol = minimize(objective, start, method="L-BFGS-B",
                           options={"maxiter": 20000, "ftol": 1e-15, "gtol": 1e-12})
            assert abs(fit.slope - sol.x[1]) < 1e-6
            assert abs(fit.intercepts["all"] - sol.x[0]) < 1e-6
            direct = objective(np.concatenate([[fit.intercepts["all"], fit.slope],
                                               fit.x_star]))
            assert direct <= sol.fun * (1 + 1e-9) + 1e-12

    def test_shared_slope_identical_groups_reduces(self):
        rng = np.random.default_rng(1)
        x = rng.normal(0, 1, 40)
        y = 0.3 - 0.9 * x + rng.normal(0, 0.1, 40)
        single = deming_fit(x, y, 0.7)
        tags = np.array(["pre", "post"] * 20, dtype=object)
        double = deming_fit(np.concatenate([x, x]), np.concatenate([y, y]), 0.7,
                            np.concatenate([np.full(40, "pre", object),
                                            np.full(40, "post", object)]))
        assert_allclose(double.slope, single.slope, rtol=1e-12)
        assert_allclose(double.intercepts["pre"], single.intercepts["all"], rtol=1e-12)
        assert_allclose(double.intercepts["post"], single.intercepts["all"], rtol=1e-12)

    def test_shared_slope_vs_joint_minimization(self):
        rng = np.random.default_rng(5)
        n = 30
        x = np.concatenate([rng.normal(0, 1, n), rng.normal(0.5, 1, n)])
        y = np.concatenate([1.0 - 0.6 * x[:n], 2.0 - 0.6 * x[n:]]) + rng.normal(0, 0.2, 2 * n)
        tags = np.concatenate([np.full(n, "pre", object), np.full(n, "post", object)])
        delta = 0.8
        fit = deming_fit(x, y, delta, tags)

        def objective(p):
            a1, a2, b = p[:3]
            xs = p[3:]
            a = np.where(tags == "pre", a1, a2)
            return np.sum((y - a - b * xs) ** 2 + delta * (x - xs) ** 2)

        start = np.concatenate([[1.0, 2.0, -0.5], x])
        sol = minimize(objective, start, method="L-BFGS-B",
                       options={"maxiter": 50000, "ftol": 1e-15, "gtol": 1e-12})
        assert abs(fit.slope - sol.x[2]) < 1e-5
        assert abs(fit.intercepts["pre"] - sol.x[0]) < 1e-5
        assert abs(fit.intercepts["post"] - sol.x[1]) < 1e-5

    def test_swap_symmetry(self):
        # fitting (y, x) with 1/delta gives slope 1/b (exact algebraic identity)
        rng = np.random.default_rng(2)
        x = rng.normal(0, 1, 60)
        y = -0.4 + 1.7 * x + rng.normal(0, 0.4, 60)
        delta = 2.5
        fwd = deming_fit(x, y, delta)
        rev = deming_fit(y, x, 1.0 / delta)
        assert_allclose(rev.slope, 1.0 / fwd.slope, rtol=1e-10)
        assert_allclose(rev.intercepts["all"], -fwd.intercepts["all"] / fwd.slope,
                        rtol=1e-10)

    def test_translation_invariance_of_slope(self):
        rng = np.random.default_rng(3)
        x = rng.normal(0, 1, 50)
        y = 0.2 - 0.8 * x + rng.normal(0, 0.3, 50)
        a = deming_fit(x, y, 1.3)
        b = deming_fit(x + 17.0, y - 4.0, 1.3)
        assert_allclose(b.slope, a.slope, rtol=1e-12)

    def test_residual_orthogonal_to_line_in_delta_metric(self):
        # <(x-x*, y-y*), (1, b)>_delta = delta dx + b dy = 0
        rng = np.random.default_rng(4)
        x = rng.normal(0, 1, 50)
        y = 1.0 - 0.5 * x + rng.normal(0, 0.3, 50)
        delta = 0.6
        fit = deming_fit(x, y, delta)
        dot = delta * (x - fit.x_star) * 1.0 + (y - fit.y_star) * fit.slope
        assert_allclose(dot, 0.0, atol=1e-12)

    def test_no_identifying_variation(self):
        x = np.full(10, 1.3)
        y = np.linspace(0, 1, 10)
        with pytest.raises(ValueError, match="no identifying variation"):
            deming_fit(x, y, 1.0)

    def test_delta_positive_required(self):
        with pytest.raises(ValueError):
            deming_fit(np.arange(4.0), np.arange(4.0), 0.0)


class TestEstimateDelta:
    def test_symmetric_noise_near_one(self):
        rng = np.random.default_rng(0)
        years = np.arange(60.0)
        base = np.sin(years / 20)
        x = base + rng.normal(0, 0.1, 60)
        y = base + rng.normal(0, 0.1, 60)
        assert 0.5 < estimate_delta(x, y, years) < 2.0

    def test_noiseless_x_hits_upper_clamp(self):
        years = np.arange(30.0)
        x = np.full(30, 2.0)
        y = np.random.default_rng(1).normal(0, 1, 30)
        assert estimate_delta(x, y, years) == 1e6

    def test_variance_ratio_recovered(self):
        rng = np.random.default_rng(2)
        years = np.arange(400.0)
        x = rng.normal(0, 0.1, 400)
        y = rng.normal(0, 0.2, 400)
        assert_allclose(estimate_delta(x, y, years), 4.0, rtol=0.35)

    def test_too_few_years(self):
        with pytest.raises(ValueError):
            estimate_delta(np.ones(4), np.ones(4), np.arange(4.0))


class TestRecoverConsumption:
    def _fits_from_truth(self, grid, c_t, g2_t, regimes=("post",)):
        fits = []
        for i in range(grid.n_bins):
            slope = -0.5 * g2_t[i]
            intercepts = {g: c_t[i] - 0.0 for g in regimes}
            fits.append(deming_fit(np.array([-2.0, -1.0, 0.0]),
                                   intercepts[regimes[0]] + slope * np.array([-2.0, -1.0, 0.0]),
                                   1.0))
        return fits

    def test_constant_variance_gradient_zero(self):
        # the line's intercept is -(c~ + grad/2); with a flat variance profile
        # the recovered mean is minus the intercept, then the scale transform
        grid = WealthGrid.from_range(0.0, 2.0, 0.1)
        g2 = 0.16
        c_t = 0.5
        x_pts = np.array([-3.0, -2.0, -1.0, 0.0])
        fits = [deming_fit(x_pts, -c_t - 0.5 * g2 * x_pts, 1.0) for _ in range(grid.n_bins)]
        prof = recover_consumption(fits, grid)
        assert_allclose(prof.consumption_var_asinh, g2, rtol=1e-10)
        w = grid.centers_wealth
        c_expected, g2_expected = consumption_from_asinh(np.full(grid.n_bins, c_t),
                                                         np.full(grid.n_bins, g2), w)
        assert_allclose(prof.consumption_mean["all"], c_expected, rtol=1e-10)
        assert_allclose(prof.consumption_var, g2_expected, rtol=1e-10)

    def test_linear_variance_gradient_recovered(self):
        # gamma~^2(x) = 0.01 + 0.002 x with constant c~ = 0.4: the recovery
        # must take the cross-bin gradient out of the intercept
        grid = WealthGrid.from_range(0.0, 3.0, 0.1)
        xs = grid.centers
        g2 = 0.01 + 0.002 * xs
        c_t = 0.4
        icpt = -c_t - 0.5 * 0.002
        x_pts = np.array([-3.0, -2.0, -1.0, 0.0])
        fits = [deming_fit(x_pts, icpt + (-0.5 * g2[i]) * x_pts, 1.0)
                for i in range(grid.n_bins)]
        prof = recover_consumption(fits, grid)
        inner = slice(5, -5)
        assert_allclose(prof.consumption_var_asinh[inner], g2[inner], rtol=0.05)
        assert_allclose(prof.consumption_mean_asinh["all"][inner], c_t, rtol=0.01)
        grad_implied = 2 * (-icpt - prof.consumption_mean_asinh["all"])
        assert_allclose(grad_implied[inner], 0.002, rtol=0.05)

    def test_wrong_signed_slope_floored_and_flagged(self):
        grid = WealthGrid.from_range(0.0, 0.3, 0.1)
        x_pts = np.array([-2.0, -1.0, 0.0])
        fits = [deming_fit(x_pts, 0.1 + 0.05 * x_pts, 1.0) for _ in range(3)]
        prof = recover_consumption(fits, grid)
        assert_allclose(prof.consumption_var_asinh, 0.0)
        assert all(f == "floored" for f in prof.flags)

    def test_top_anchor_sigma_04w(self):
        # slope -0.08 on the asinh scale at large wealth maps to 0.16 w^2
        grid = WealthGrid.from_range(5.0, 6.0, 0.1)
        x_pts = np.array([-3.0, -2.0, -1.0])
        fits = [deming_fit(x_pts, 0.5 - 0.08 * x_pts, 1.0) for _ in range(grid.n_bins)]
        prof = recover_consumption(fits, grid)
        w = grid.centers_wealth
        assert_allclose(prof.consumption_var, 0.16 * (1 + w**2), rtol=1e-9)
        assert_allclose(prof.consumption_var / w**2, 0.16, rtol=1e-3)


class TestBootstrapCovariance:
    def test_independent_model_gives_diagonal(self):
        model = BootstrapModel(rho=np.zeros(3), r=0.0, sigma=np.array([1.0, 2.0, 0.5]))
        cov = build_covariance(model, 3, 4)
        expected = np.diag(np.repeat(np.array([1.0, 2.0, 0.5]) ** 2, 4))
        assert_allclose(cov, expected, atol=1e-12)

    def test_sampler_matches_covariance(self):
        model = BootstrapModel(rho=np.array([0.5, -0.3]), r=0.4,
                               sigma=np.array([1.0, 0.7]))
        rng = np.random.default_rng(0)
        draws = np.stack([sample_noise(model, 2, 3, rng).ravel() for _ in range(40_000)])
        emp = np.cov(draws.T)
        assert_allclose(emp, build_covariance(model, 2, 3), atol=0.03)

    def test_psd(self):
        model = BootstrapModel(rho=np.array([0.9, 0.8, -0.7]), r=-0.6,
                               sigma=np.array([1.0, 1.0, 1.0]))
        vals = np.linalg.eigvalsh(build_covariance(model, 3, 5))
        assert np.min(vals) > -1e-10

    def test_moment_estimation_white_noise(self):
        rng = np.random.default_rng(1)
        resid = rng.normal(0, 2.0, (4, 400))
        model = estimate_bootstrap_model(resid)
        assert np.all(np.abs(model.rho) < 0.15)
        assert abs(model.r) < 0.15
        assert_allclose(model.sigma, 2.0, rtol=0.1)

    def test_slope_se_matches_ols_for_small_delta(self):
        # single bin, single period: the bootstrap slope spread approaches the
        # textbook OLS slope standard error as delta -> 0
        rng = np.random.default_rng(3)
        n = 200
        x = np.linspace(0, 10, n)
        y = 1.0 + 0.5 * x + rng.normal(0, 0.5, n)
        delta = 1e-6
        fit = deming_fit(x, y, delta)
        sigma_e = np.sqrt(np.mean(fit.residuals**2))
        slopes = []
        for _ in range(2000):
            e = rng.normal(0, sigma_e, n)
            scale = np.sqrt(delta * (fit.slope**2 + delta))
            x_new = fit.x_star + e * fit.slope / scale
            y_new = fit.y_star - e * delta / scale
            slopes.append(deming_fit(x_new, y_new, delta).slope)
        boot_se = np.std(slopes)
        resid_ols = y - np.polyval(np.polyfit(x, y, 1), x)
        ols_se = np.sqrt(np.sum(resid_ols**2) / (n - 2) / np.sum((x - x.mean()) ** 2))
        assert abs(boot_se - ols_se) / ols_se < 0.15


class TestBuildLhs:
    def _stationary_snapshots(self, grid, years, lam=1.5):
        mass = np.exp(-lam * grid.centers)
        mass /= mass.sum()
        return [DistributionSnapshot(t, grid, mass) for t in years]

    def test_all_terms_vanish_in_stationary_zero_income(self):
        grid = WealthGrid.from_range(0.0, 3.0, 0.1)
        years = np.arange(2000.0, 2020.0)
        snaps = self._stationary_snapshots(grid, years)
        zeros = np.zeros((grid.n_bins, len(years)))
        panel = build_lhs(snaps, zeros, zeros)
        assert np.nanmax(np.abs(panel.y)) < 1e-10

    def test_pure_demography_term_isolated(self):
        grid = WealthGrid.from_range(0.0, 3.0, 0.1)
        years = np.arange(2000.0, 2015.0)
        snaps = self._stationary_snapshots(grid, years)
        zeros = np.zeros((grid.n_bins, len(years)))
        Z = np.tile(-0.01 * snaps[0].cdf, (len(years), 1))
        panel = build_lhs(snaps, zeros, zeros, effects_by_year=Z)
        expected = Z[0] / snaps[0].density_asinh
        for k in range(len(years)):
            ok = np.isfinite(panel.y[:, k])
            assert_allclose(panel.y[ok, k], expected[ok], rtol=1e-9)

    def test_regime_tagging(self):
        grid = WealthGrid.from_range(0.0, 2.0, 0.1)
        years = np.arange(1970.0, 1990.0)
        snaps = self._stationary_snapshots(grid, years)
        zeros = np.zeros((grid.n_bins, len(years)))
        panel = build_lhs(snaps, zeros, zeros, break_year=1978.0)
        assert list(panel.period[:8]) == ["pre"] * 8
        assert list(panel.period[8:]) == ["post"] * 12


class TestEndToEndIdentification:
    def _make_panel(self, slope=-0.08, c_pre=0.7, c_post=0.5, noise=0.0, seed=0,
                    x_varies=True):
        grid = WealthGrid.from_range(0.0, 1.0, 0.1)
        years = np.arange(1960.0, 2000.0)
        rng = np.random.default_rng(seed)
        n_bins, n_years = grid.n_bins, len(years)
        x = np.empty((n_bins, n_years))
        y = np.empty_like(x)
        period = np.array(["pre" if t < 1978 else "post" for t in years], dtype=object)
        for i in range(n_bins):
            if x_varies:
                xs = -3.0 + 1.5 * (1 - np.exp(-(years - 1960) / 15.0)) + 0.1 * i
            else:
                xs = np.full(n_years, -2.0 + 0.1 * i)
            a = np.where(period == "pre", c_pre, c_post)
            x[i] = xs + rng.normal(0, noise, n_years)
            y[i] = a + slope * xs + rng.normal(0, noise, n_years)
        return PhasePanel(grid, years, x, y, period)

    def test_constant_parameters_recovered(self):
        panel = self._make_panel()
        pf = fit_panel(panel, Bandwidths(delta=1.0))
        for fit in pf.fits:
            assert fit is not None
            assert_allclose(fit.slope, -0.08, rtol=1e-9)
            assert_allclose(fit.intercepts["pre"], 0.7, rtol=1e-9)
            assert_allclose(fit.intercepts["post"], 0.5, rtol=1e-9)

    def test_assumption_violation_reported(self):
        panel = self._make_panel(x_varies=False)
        with pytest.raises(ValueError, match="no identifying variation"):
            deming_fit(*panel.records(3)[:2], 1.0, panel.records(3)[2])

    def test_noisy_recovery(self):
        panel = self._make_panel(noise=0.02, seed=4)
        pf = fit_panel(panel)
        slopes = [f.slope for f in pf.fits if f is not None]
        assert abs(np.mean(slopes) + 0.08) < 0.01


class TestBootstrapCoverageSmoke:
    def test_interval_brackets_truth(self):
        panel = TestEndToEndIdentification()._make_panel(noise=0.02, seed=9)
        pf = fit_panel(panel)
        model = estimate_bootstrap_model(pf.residuals, n_draws=200)
        prof = bootstrap(pf, model, np.random.default_rng(0))
        lo, hi = prof.ci_var
        ok = np.isfinite(lo)
        # truth: gamma~^2 = 0.16 on the asinh scale, transformed per bin
        w = panel.grid.centers_wealth
        _, g2_true = consumption_from_asinh(np.zeros_like(w), np.full_like(w, 0.16), w)
        assert np.mean((lo[ok] <= g2_true[ok]) & (g2_true[ok] <= hi[ok])) > 0.6
