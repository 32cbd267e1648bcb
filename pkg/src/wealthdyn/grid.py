"""Grids, transforms, and nonparametric building blocks.

Wealth is measured in multiples of average national income and binned on the
inverse-hyperbolic-sine (asinh) scale, which behaves like log(2w) for large
wealth but stays linear through zero and negative values. All smoothing uses
rectangular kernels; a bandwidth of b includes points within b/2 of the target
(so a "5 year" bandwidth on annual data is a 5-point moving average).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

EMPTY_DENSITY = 1e-12  # bins below this are treated as unobserved in log-space


def asinh(w):
    """Map wealth to the asinh scale: log(w + sqrt(w^2 + 1))."""
    return np.arcsinh(w)


def asinh_inv(x):
    """Inverse of :func:`asinh`."""
    return np.sinh(x)


@dataclass(frozen=True)
class WealthGrid:
    """Contiguous equal-width bins on the asinh scale."""

    lower_asinh: float
    bin_width: float
    n_bins: int

    def __post_init__(self):
        if self.n_bins <= 0:
            raise ValueError("n_bins must be positive")
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")

    @classmethod
    def default(cls) -> "WealthGrid":
        # -1 to ~2000 times average income, 91 bins of 0.1 asinh units
        return cls(lower_asinh=float(np.arcsinh(-1.0)), bin_width=0.1, n_bins=91)

    @classmethod
    def from_range(cls, lower_asinh: float, upper_asinh: float, bin_width: float = 0.1) -> "WealthGrid":
        n = int(round((upper_asinh - lower_asinh) / bin_width))
        if n <= 0 or abs(lower_asinh + n * bin_width - upper_asinh) > 1e-9 * max(1.0, abs(upper_asinh)):
            raise ValueError("range is not an integer number of bins")
        return cls(lower_asinh=lower_asinh, bin_width=bin_width, n_bins=n)

    @property
    def upper_asinh(self) -> float:
        return self.lower_asinh + self.n_bins * self.bin_width

    @property
    def edges(self) -> np.ndarray:
        return self.lower_asinh + self.bin_width * np.arange(self.n_bins + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.lower_asinh + self.bin_width * (np.arange(self.n_bins) + 0.5)

    @property
    def centers_wealth(self) -> np.ndarray:
        """Bin centers mapped back to the linear wealth scale."""
        return np.sinh(self.centers)

    @property
    def wealth_bounds(self) -> tuple[float, float]:
        return float(np.sinh(self.lower_asinh)), float(np.sinh(self.upper_asinh))

    def bin_index(self, wealth) -> np.ndarray:
        """Bin index of each wealth value; -1 below range, n_bins above."""
        x = np.arcsinh(np.asarray(wealth, dtype=float))
        idx = np.floor((x - self.lower_asinh) / self.bin_width).astype(np.int64)
        idx[x < self.lower_asinh] = -1
        return np.minimum(idx, self.n_bins)

    def bin_wealth_widths(self) -> np.ndarray:
        """Linear-wealth width of each asinh bin."""
        return np.diff(np.sinh(self.edges))


@dataclass
class DistributionSnapshot:
    """Population share per wealth bin at one point in time."""

    time: float
    grid: WealthGrid
    mass: np.ndarray
    overflow_below: float = 0.0
    overflow_above: float = 0.0

    def __post_init__(self):
        self.mass = np.asarray(self.mass, dtype=float)
        if self.mass.shape != (self.grid.n_bins,):
            raise ValueError("mass length does not match grid")
        if np.any(self.mass < 0):
            raise ValueError("mass must be nonnegative")

    @property
    def density_asinh(self) -> np.ndarray:
        """Density with respect to the asinh coordinate."""
        return self.mass / self.grid.bin_width

    @property
    def density_wealth(self) -> np.ndarray:
        """Density with respect to linear wealth, at bin level."""
        return self.mass / self.grid.bin_wealth_widths()

    @property
    def cdf(self) -> np.ndarray:
        """Cumulative mass at bin upper edges."""
        return np.cumsum(self.mass)

    @property
    def cdf_at_centers(self) -> np.ndarray:
        """Cumulative mass up to bin centers (half of own bin included)."""
        return np.cumsum(self.mass) - 0.5 * self.mass

    def total_mass(self) -> float:
        return float(self.mass.sum())

    def normalized(self) -> "DistributionSnapshot":
        total = self.mass.sum()
        if total <= 0:
            raise ValueError("cannot normalize a zero-mass snapshot")
        return DistributionSnapshot(self.time, self.grid, self.mass / total)


def build_histogram(samples, grid: WealthGrid, weights=None, time: float = 0.0,
                    normalize: bool = True) -> DistributionSnapshot:
    """Bin weighted wealth samples on the asinh grid.

    Out-of-range samples accumulate into the snapshot's overflow counters;
    in-range mass is proportional to summed weights per bin.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("no observations")
    if weights is None:
        weights = np.ones_like(samples)
    else:
        weights = np.asarray(weights, dtype=float)
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
    total = weights.sum()
    if total <= 0:
        raise ValueError("no observations")

    idx = grid.bin_index(samples)
    below = float(weights[idx < 0].sum())
    above = float(weights[idx >= grid.n_bins].sum())
    inside = (idx >= 0) & (idx < grid.n_bins)
    mass = np.bincount(idx[inside], weights=weights[inside], minlength=grid.n_bins)
    if normalize:
        mass = mass / total
        below /= total
        above /= total
    return DistributionSnapshot(time, grid, mass, overflow_below=below, overflow_above=above)


def _rect_window(coords: np.ndarray, center: float, bandwidth: float) -> np.ndarray:
    # full-width convention: window spans bandwidth/2 on each side
    return np.abs(coords - center) <= 0.5 * bandwidth + 1e-12


def moving_average(values, coords, bandwidth: float, eval_coords=None) -> np.ndarray:
    """Locally constant regression (rectangular kernel): windowed mean.

    NaN values are skipped; windows with no finite points return NaN. Windows
    shrink one-sidedly at the boundary rather than extrapolating.
    """
    values = np.asarray(values, dtype=float)
    coords = np.asarray(coords, dtype=float)
    if eval_coords is None:
        eval_coords = coords
    out = np.full(len(eval_coords), np.nan)
    finite = np.isfinite(values)
    for k, c in enumerate(eval_coords):
        sel = _rect_window(coords, c, bandwidth) & finite
        if sel.any():
            out[k] = values[sel].mean()
    return out


def local_linear(values, coords, bandwidth: float, eval_coords=None):
    """Locally linear regression (rectangular kernel).

    Returns (fitted values, slopes) at eval_coords. A window needs at least
    two distinct finite points to identify the slope; otherwise NaN.
    """
    values = np.asarray(values, dtype=float)
    coords = np.asarray(coords, dtype=float)
    if eval_coords is None:
        eval_coords = coords
    fit = np.full(len(eval_coords), np.nan)
    slope = np.full(len(eval_coords), np.nan)
    finite = np.isfinite(values)
    for k, c in enumerate(eval_coords):
        sel = _rect_window(coords, c, bandwidth) & finite
        n = int(sel.sum())
        if n == 0:
            continue
        xs = coords[sel]
        ys = values[sel]
        if n == 1 or np.ptp(xs) == 0:
            fit[k] = ys.mean()
            continue
        xbar = xs.mean()
        ybar = ys.mean()
        sxx = np.sum((xs - xbar) ** 2)
        sxy = np.sum((xs - xbar) * (ys - ybar))
        b = sxy / sxx
        fit[k] = ybar + b * (c - xbar)
        slope[k] = b
    return fit, slope


def log_density_slope(snapshot: DistributionSnapshot, bandwidth: float = 1.5,
                      degree: int = 1) -> np.ndarray:
    """Per-bin slope of log density on the asinh scale.

    Bins with density below the empty-bin floor are excluded from windows;
    bins whose window has too few usable neighbors return NaN. degree=1 is a
    locally linear fit; degree=3 removes the curvature bias of wide windows at
    the cost of more variance per window point.
    """
    if bandwidth < snapshot.grid.bin_width:
        raise ValueError("bandwidth must be at least one bin width")
    dens = snapshot.density_asinh
    if not np.any(dens > EMPTY_DENSITY):
        raise ValueError("all-zero density")
    logd = np.where(dens > EMPTY_DENSITY, np.log(np.maximum(dens, EMPTY_DENSITY)), np.nan)
    if degree == 1:
        _, slope = local_linear(logd, snapshot.grid.centers, bandwidth)
    else:
        x = snapshot.grid.centers
        slope = np.full(len(x), np.nan)
        finite = np.isfinite(logd)
        for i in range(len(x)):
            sel = _rect_window(x, x[i], bandwidth) & finite
            if sel.sum() >= degree + 2:
                coeffs = np.polyfit(x[sel] - x[i], logd[sel], degree)
                slope[i] = coeffs[-2]
    slope[~(dens > EMPTY_DENSITY)] = np.nan
    return slope


@dataclass
class LogisticFit:
    """Fitted logistic trend L(t) = x_inf / (1 + (x_inf/x0 - 1) e^{-rho (t - t_ref)})."""

    x0: float
    x_inf: float
    rho: float
    t_ref: float
    residual: float
    fitted: np.ndarray = field(repr=False)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.rho == 0.0:
            return np.broadcast_to(np.float64(self.x0), t.shape).copy() if t.shape else float(self.x0)
        ratio = self.x_inf / self.x0 - 1.0
        return self.x_inf / (1.0 + ratio * np.exp(-self.rho * (t - self.t_ref)))

    def derivative(self, t):
        """dL/dt, analytic: rho * L * (1 - L/x_inf)."""
        if self.rho == 0.0:
            t = np.asarray(t, dtype=float)
            return np.zeros(t.shape) if t.shape else 0.0
        val = self.value(t)
        return self.rho * val * (1.0 - val / self.x_inf)


def _logistic_curve(t, x0, x_inf, rho):
    return x_inf / (1.0 + (x_inf / x0 - 1.0) * np.exp(-rho * t))


def fit_logistic_trend(times, values, max_iter: int = 200) -> LogisticFit:
    """Nonlinear least-squares fit of a logistic trend to a time series.

    Values must be of one sign. Constant series return x0 = x_inf = value and
    rho = 0 by convention (the rate is unidentified).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 4:
        raise ValueError("need at least 4 points")
    if np.any(values > 0) and np.any(values < 0):
        raise ValueError("values must be of one sign")

    t_ref = times[0]
    ts = times - t_ref
    if np.ptp(values) == 0:
        c = float(values[0])
        return LogisticFit(c, c, 0.0, t_ref, 0.0, values.copy())

    sign = 1.0 if values[0] > 0 else -1.0
    v = sign * values  # work on the positive side
    x0_init = v[0]
    xinf_init = v[-1]
    # seed rho from a log-odds linear fit against a padded asymptote
    pad = 1.05 if xinf_init >= x0_init else 0.95
    xa = xinf_init * pad
    with np.errstate(divide="ignore", invalid="ignore"):
        odds = np.log(np.abs(xa / v - 1.0))
    ok = np.isfinite(odds)
    rho_init = 0.1
    if ok.sum() >= 2 and np.ptp(ts[ok]) > 0:
        rho_init = -np.polyfit(ts[ok], odds[ok], 1)[0]
    if not np.isfinite(rho_init) or rho_init == 0:
        rho_init = 0.1

    def resid(p):
        return _logistic_curve(ts, *p) - v

    sol = least_squares(resid, x0=[x0_init, xinf_init, rho_init], method="lm",
                        gtol=1e-10, xtol=1e-12, max_nfev=max_iter * 4)
    best = float(np.sqrt(np.mean(sol.fun**2)))
    if not sol.success and best > 1e-6 * max(1.0, np.abs(v).max()):
        raise RuntimeError(f"logistic fit did not converge (rms residual {best:.3g})")
    x0, x_inf, rho = sol.x
    fitted = sign * _logistic_curve(ts, x0, x_inf, rho)
    return LogisticFit(sign * x0, sign * x_inf, float(rho), float(t_ref), best, fitted)


def cdf_time_derivative_from_log_survival(log_survival, log_survival_slope):
    """Time derivative of the CDF from the log-survival trend.

    d/dt log(1-F) = -dF/dt / (1-F), hence dF/dt = -(1-F) d/dt log(1-F).
    """
    return -np.exp(np.asarray(log_survival, dtype=float)) * np.asarray(log_survival_slope, dtype=float)


def cdf_time_derivative(fit: LogisticFit | None, t: float) -> float:
    """dF/dt at time t from a logistic fit of the log-survival series."""
    if fit is None:
        return np.nan
    return float(cdf_time_derivative_from_log_survival(fit.value(t), fit.derivative(t)))


def to_asinh_scale(drift, variance, wealth):
    """Map drift/diffusion of a wealth process to the asinh scale (Ito's lemma).

    drift_t = drift/s - w*variance/(2 s^3), variance_t = variance/s^2,
    with s = sqrt(1 + w^2).
    """
    drift = np.asarray(drift, dtype=float)
    variance = np.asarray(variance, dtype=float)
    wealth = np.asarray(wealth, dtype=float)
    if np.any(variance < 0):
        raise ValueError("variance must be nonnegative")
    s2 = 1.0 + wealth**2
    s = np.sqrt(s2)
    var_t = variance / s2
    drift_t = drift / s - 0.5 * wealth * var_t / s
    return drift_t, var_t


def from_asinh_scale(drift_t, variance_t, wealth):
    """Exact inverse of :func:`to_asinh_scale`."""
    drift_t = np.asarray(drift_t, dtype=float)
    variance_t = np.asarray(variance_t, dtype=float)
    wealth = np.asarray(wealth, dtype=float)
    if np.any(variance_t < 0):
        raise ValueError("variance must be nonnegative")
    s2 = 1.0 + wealth**2
    s = np.sqrt(s2)
    variance = variance_t * s2
    drift = drift_t * s + 0.5 * wealth * variance_t
    return drift, variance


def consumption_from_asinh(mean_t, variance_t, wealth):
    """Back-transform a consumption profile from the asinh to the linear scale.

    Consumption enters the drift with a negative sign, so its Ito correction
    has the opposite sign from a drift-type quantity:
    c = c_t*sqrt(1+w^2) - w*variance_t/2, variance = variance_t*(1+w^2).
    """
    d, v = from_asinh_scale(-np.asarray(mean_t, dtype=float), variance_t, wealth)
    return -d, v


def consumption_to_asinh(mean, variance, wealth):
    """Inverse of :func:`consumption_from_asinh`."""
    d, v = to_asinh_scale(-np.asarray(mean, dtype=float), variance, wealth)
    return -d, v
