"""Joe and Frank copulas: conditional sampling and Kendall-tau calibration.

The Joe copula captures the weak positive dependence between wealth rank and
inheritance rank (tau = 0.083); the Frank copula captures assortative mating
between spouses' wealth ranks (tau = 0.28).
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

JOE, FRANK = "joe", "frank"
INDEPENDENT = 0.0  # returned by calibrate for tau == 0


def _check_theta(family: str, theta: float) -> None:
    if family == JOE:
        if theta < 1.0:
            raise ValueError("Joe copula requires theta >= 1")
    elif family == FRANK:
        if theta == 0.0:
            raise ValueError("Frank copula requires theta != 0 (use independence directly)")
    else:
        raise ValueError(f"unknown copula family: {family}")


def joe_cdf(u, v, theta: float) -> np.ndarray:
    _check_theta(JOE, theta)
    ub = (1.0 - np.asarray(u, dtype=float)) ** theta
    vb = (1.0 - np.asarray(v, dtype=float)) ** theta
    return 1.0 - (ub + vb - ub * vb) ** (1.0 / theta)


def frank_cdf(u, v, theta: float) -> np.ndarray:
    _check_theta(FRANK, theta)
    num = np.expm1(-theta * np.asarray(u, dtype=float)) * np.expm1(-theta * np.asarray(v, dtype=float))
    return -np.log1p(num / np.expm1(-theta)) / theta


def _frank_conditional_inverse(u, p, theta: float) -> np.ndarray:
    # solve d/du C(u,v) = p for v, closed form
    eu = np.exp(-theta * u)
    y = p * np.expm1(-theta) / (eu * (1.0 - p) + p)
    return -np.log1p(y) / theta


def _joe_conditional(u, v, theta: float) -> np.ndarray:
    # h(v|u) = dC/du, increasing from 0 to 1 in v
    ub = (1.0 - u) ** theta
    vb = (1.0 - v) ** theta
    s = ub + vb - ub * vb
    return (1.0 - u) ** (theta - 1.0) * (1.0 - vb) * s ** (1.0 / theta - 1.0)


def copula_sample(family: str, theta: float, u, rng: np.random.Generator) -> np.ndarray:
    """Sample v | u by conditional inverse so (u, v) has the target copula."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    p = rng.random(len(u))
    return conditional_quantile(family, theta, u, p)


def conditional_quantile(family: str, theta: float, u, p) -> np.ndarray:
    """v such that P(V <= v | U = u) = p."""
    _check_theta(family, theta)
    if family == JOE and np.isscalar(u) and np.isscalar(p):
        return _joe_quantile_scalar(float(u), float(p), theta)
    u = np.clip(np.asarray(u, dtype=float), 1e-12, 1.0 - 1e-12)
    p = np.clip(np.asarray(p, dtype=float), 1e-12, 1.0 - 1e-12)
    if family == FRANK:
        return _frank_conditional_inverse(u, p, theta)
    # Joe: vectorized bisection on the conditional CDF
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        below = _joe_conditional(u, mid, theta) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _joe_quantile_scalar(u: float, p: float, theta: float) -> float:
    u = min(max(u, 1e-12), 1.0 - 1e-12)
    p = min(max(p, 1e-12), 1.0 - 1e-12)
    ub = (1.0 - u) ** theta
    pref = (1.0 - u) ** (theta - 1.0)
    lo, hi = 0.0, 1.0
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        vb = (1.0 - mid) ** theta
        h = pref * (1.0 - vb) * (ub + vb - ub * vb) ** (1.0 / theta - 1.0)
        if h < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _debye1(theta: float) -> float:
    val, _ = quad(lambda t: t / np.expm1(t), 0.0, theta, limit=200)
    return val / theta


def kendall_tau(family: str, theta: float) -> float:
    """Kendall's tau implied by the copula parameter."""
    if theta == INDEPENDENT:
        return 0.0
    _check_theta(family, theta)
    if family == FRANK:
        return 1.0 - 4.0 / theta * (1.0 - _debye1(theta))
    # Archimedean identity tau = 1 - 4 * int_0^1 phi(t)/|phi'(t)| dt with the
    # Joe generator phi(t) = -log(1 - (1-t)^theta); written via
    # u = 1 - (1-t)^theta for stability at both endpoints
    def integrand(t):
        u = -np.expm1(theta * np.log1p(-t))
        if u <= 0.0 or u >= 1.0:
            return 0.0
        return -np.log(u) * u / (theta * (1.0 - t) ** (theta - 1.0))

    # the integrand concentrates near t = 0 for large theta
    pts = sorted({min(0.5, 10.0 / theta**2), min(0.5, 1.0 / theta), 1e-8, 1e-4, 1e-2})
    val, _ = quad(integrand, 0.0, 1.0, limit=400, points=pts)
    return 1.0 - 4.0 * val


def calibrate_copula_theta(family: str, tau: float) -> float:
    """Invert tau(theta) for the target Kendall's tau."""
    if family == FRANK:
        if tau == 0.0:
            return INDEPENDENT
        if not -1.0 < tau < 1.0:
            raise ValueError("Frank copula requires |tau| < 1")
        lo, hi = (1e-8, 500.0) if tau > 0 else (-500.0, -1e-8)
        return float(brentq(lambda th: kendall_tau(FRANK, th) - tau, lo, hi, xtol=1e-12))
    if family == JOE:
        if not 0.0 <= tau < 1.0:
            raise ValueError("Joe copula requires tau in [0, 1)")
        if tau == 0.0:
            return 1.0  # theta = 1 is the independence member
        hi = 2.0
        while kendall_tau(JOE, hi) < tau:
            hi *= 2.0
            if hi > 512.0:
                raise ValueError("tau target out of reach for the Joe copula")
        return float(brentq(lambda th: kendall_tau(JOE, th) - tau, 1.0 + 1e-10, hi, xtol=1e-12))
    raise ValueError(f"unknown copula family: {family}")
