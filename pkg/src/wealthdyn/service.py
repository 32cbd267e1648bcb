"""HTTP JSON service consumed by the policy what-if UI.

Stateless handlers over an immutable baseline loaded at startup. Responses are
byte-deterministic: no hidden randomness, and every float is serialized with
17 significant digits. Binds localhost by default; this is a desk companion,
not a deployment.
"""

from __future__ import annotations

import json
import math

import numpy as np
from fastapi import FastAPI, Request, Response

from wealthdyn import io as wio
from wealthdyn.fokker_planck import tail_alpha
from wealthdyn.tax import (
    EstateModel,
    TaxPolicy,
    laffer_point,
    rebate_fixed_point,
    revenue_maximizing_rate,
    reweighting_factor,
    steady_state_with_tax,
    tax_comparison_curve,
)


def _encode(obj):
    """JSON with floats at 17 significant digits; rejects non-finite values."""
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise ValueError("non-finite numeric field in response")
        return format(float(obj), ".17g")
    if isinstance(obj, (int, np.integer)):
        return repr(int(obj))
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_encode(v)}" for k, v in obj.items()) + "}"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _json_response(payload, status_code: int = 200) -> Response:
    return Response(content=_encode(payload), status_code=status_code,
                    media_type="application/json")


def _error(status: int, error: str, detail: str) -> Response:
    return _json_response({"error": error, "detail": detail}, status_code=status)


class Baseline:
    """Immutable baseline distribution and mobility/consumption profiles."""

    def __init__(self, snapshot, sigma2, consumption, avg_income_usd: float = 80_000.0):
        self.snapshot = snapshot
        self.grid = snapshot.grid
        self.sigma2 = sigma2
        self.consumption = consumption
        self.avg_income_usd = avg_income_usd

    @classmethod
    def synthetic(cls, avg_income_usd: float = 80_000.0) -> "Baseline":
        snap, sigma2, cons = wio.synthetic_baseline()
        return cls(snap, sigma2, cons, avg_income_usd)

    @classmethod
    def from_panel(cls, path, avg_income_usd: float = 80_000.0) -> "Baseline":
        """Last panel snapshot with the standard proportional-mobility profiles."""
        panel = wio.load_panel(path)
        snap = panel.snapshots()[-1]
        _, sigma2, cons = wio.synthetic_baseline(grid=None)
        return cls(snap, sigma2, cons, avg_income_usd)


def bracket_shares(grid, mass) -> dict:
    """Wealth shares of the bottom 50%, middle 40%, next 9%, and top 1%."""
    edges = grid.edges
    h = grid.bin_width
    bin_wealth = np.asarray(mass) * (np.cosh(edges[1:]) - np.cosh(edges[:-1])) / h
    total_wealth = bin_wealth.sum()
    cdf = np.cumsum(mass)
    cum_wealth = np.cumsum(bin_wealth)

    def wealth_below(p):
        k = int(np.searchsorted(cdf, p))
        if k >= len(mass):
            return total_wealth
        below = cdf[k] - mass[k]
        frac = (p - below) / mass[k] if mass[k] > 0 else 0.0
        x_split = edges[k] + frac * h
        partial = mass[k] * (np.cosh(x_split) - np.cosh(edges[k])) / h
        return (cum_wealth[k] - bin_wealth[k]) + partial

    w50, w90, w99 = wealth_below(0.5), wealth_below(0.9), wealth_below(0.99)
    return {
        "bottom50": float(w50 / total_wealth),
        "middle40": float((w90 - w50) / total_wealth),
        "next9": float((w99 - w90) / total_wealth),
        "top1": float((total_wealth - w99) / total_wealth),
    }


def _parse_policy(body: dict) -> TaxPolicy:
    schedule = body.get("schedule")
    if not isinstance(schedule, list) or not schedule:
        raise ValueError("schedule must be a nonempty list of [threshold, rate] pairs")
    pairs = [(float(t), float(r)) for t, r in schedule]
    return TaxPolicy(pairs, float(body.get("epsilon", 0.0)), float(body.get("eta", 0.0)))


def build_app(panel_path=None, avg_income_usd: float = 80_000.0) -> FastAPI:
    if panel_path:
        baseline = Baseline.from_panel(panel_path, avg_income_usd)
    else:
        baseline = Baseline.synthetic(avg_income_usd)
    app = FastAPI(title="wealthdyn service", docs_url=None, redoc_url=None)

    @app.exception_handler(Exception)
    async def handle_any(request, exc):  # noqa: ANN001
        return _error(422, type(exc).__name__, str(exc))

    async def read_body(request: Request) -> dict | Response:
        try:
            body = await request.json()
        except Exception:
            return _error(400, "BadRequest", "body must be valid JSON")
        if not isinstance(body, dict):
            return _error(400, "BadRequest", "body must be a JSON object")
        return body

    @app.get("/api/health")
    async def health():
        return _json_response({"status": "ok"})

    @app.get("/api/baseline")
    async def get_baseline():
        snap = baseline.snapshot
        alpha = tail_alpha(snap, tail_start=snap.grid.centers[len(snap.mass) // 2])
        return _json_response({
            "grid": {
                "lower_asinh": baseline.grid.lower_asinh,
                "bin_width": baseline.grid.bin_width,
                "n_bins": baseline.grid.n_bins,
            },
            "centers_asinh": baseline.grid.centers,
            "mass": snap.mass,
            "tail_alpha": alpha,
            "avg_income_usd": baseline.avg_income_usd,
            "bracket_shares": bracket_shares(baseline.grid, snap.mass),
        })

    @app.post("/api/tax/laffer")
    async def laffer(request: Request):
        body = await read_body(request)
        if isinstance(body, Response):
            return body
        try:
            policy = _parse_policy(body)
            rate_grid = [float(r) for r in body.get("rate_grid", [])]
        except (ValueError, TypeError) as exc:
            return _error(400, "BadRequest", str(exc))
        try:
            points = []
            for rate in rate_grid:
                sched = list(policy.schedule)
                sched[-1] = (sched[-1][0], rate)  # the grid sweeps the top rate
                pol = TaxPolicy(sched, policy.avoidance_elasticity,
                                policy.consumption_elasticity)
                out = laffer_point(pol, baseline.snapshot, baseline.sigma2,
                                   baseline.consumption)
                points.append({"rate": rate, "revenue_static": out.revenue_static,
                               "revenue_long_run": out.revenue_long_run})
            return _json_response({"points": points})
        except ValueError as exc:
            return _error(422, "ComputationError", str(exc))

    @app.post("/api/tax/steady-state")
    async def steady_state_endpoint(request: Request):
        body = await read_body(request)
        if isinstance(body, Response):
            return body
        try:
            policy = _parse_policy(body)
            with_rebate = bool(body.get("rebate", False))
        except (ValueError, TypeError) as exc:
            return _error(400, "BadRequest", str(exc))
        try:
            snap = baseline.snapshot
            theta = reweighting_factor(policy, baseline.sigma2, baseline.consumption,
                                       baseline.grid)
            if with_rebate:
                out = rebate_fixed_point(policy, snap, baseline.sigma2,
                                         baseline.consumption)
            else:
                out = laffer_point(policy, snap, baseline.sigma2, baseline.consumption)
            return _json_response({
                "theta": theta,
                "mass_before": snap.mass / snap.mass.sum(),
                "mass_after": out.density_after,
                "revenue_static": out.revenue_static,
                "revenue_long_run": out.revenue_long_run,
                "rebate": out.rebate,
                "bracket_shares_before": bracket_shares(baseline.grid, snap.mass),
                "bracket_shares_after": bracket_shares(baseline.grid, out.density_after),
            })
        except ValueError as exc:
            return _error(422, "ComputationError", str(exc))

    @app.post("/api/tax/optimum")
    async def optimum(request: Request):
        body = await read_body(request)
        if isinstance(body, Response):
            return body
        try:
            policy = _parse_policy(body)
        except (ValueError, TypeError) as exc:
            return _error(400, "BadRequest", str(exc))
        try:
            threshold = policy.schedule[-1][0]
            best, curve = revenue_maximizing_rate(
                threshold, baseline.snapshot, baseline.sigma2, baseline.consumption,
                epsilon=policy.avoidance_elasticity, eta=policy.consumption_elasticity)
            return _json_response({
                "rate": best,
                "curve": [{"rate": r, "revenue_long_run": v} for r, v in curve],
            })
        except ValueError as exc:
            return _error(422, "ComputationError", str(exc))

    @app.post("/api/tax/estate-compare")
    async def estate_compare(request: Request):
        body = await read_body(request)
        if isinstance(body, Response):
            return body
        try:
            model = EstateModel(drift=float(body["mu"]), sigma=float(body["sigma"]),
                                death_rate=float(body["delta"]))
            rates = [float(r) for r in body["rates"]]
        except (KeyError, ValueError, TypeError) as exc:
            return _error(400, "BadRequest", f"mu, sigma, delta, rates required: {exc}")
        try:
            annual, inherit = tax_comparison_curve(model, rates)
            return _json_response({
                "rates": rates,
                "alpha_annual_tax": annual,
                "alpha_inheritance_tax": inherit,
                "alpha_full_inheritance_tax": model.alpha_full_inheritance_tax(),
            })
        except ValueError as exc:
            return _error(422, "ComputationError", str(exc))

    return app
