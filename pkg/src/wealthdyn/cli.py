"""Command-line surface.

Subcommands: synth, simulate, estimate, counterfactual, tax (laffer, optimum,
rebate, estate-compare), decompose, phase, serve. Stochastic commands require
--seed; every run writes a manifest (config hash, seed, versions) next to its
outputs. Errors exit nonzero with machine-readable JSON on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from wealthdyn import io as wio
from wealthdyn import synth
from wealthdyn.decompose import Scenario, decompose_growth, phase_portrait, run_counterfactual
from wealthdyn.estimator import fit_panel
from wealthdyn.events import EventEffects
from wealthdyn.grid import DistributionSnapshot
from wealthdyn.pipeline import estimate_from_panel, phase_panel_from_panel
from wealthdyn.population import Particles, sample_wealth_from_snapshot
from wealthdyn.sde import DriftDiffusionProfile, SimulationConfig, simulate
from wealthdyn.tax import (
    EstateModel,
    TaxPolicy,
    laffer_curve,
    rebate_fixed_point,
    revenue_maximizing_rate,
    laffer_point,
    tax_comparison_curve,
)

USAGE_ERROR, RUN_ERROR = 2, 1


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                             for v in row])


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, out: Path, **extra):
    meta = {"command": args.command, "seed": getattr(args, "seed", None)}
    if getattr(args, "config", None):
        meta["config_hash"] = wio.config_hash(args.config)
    meta.update(extra)
    wio.write_manifest(out, meta)


def _parse_rate_grid(spec: str) -> np.ndarray:
    if ":" in spec:
        start, stop, step = (float(p) for p in spec.split(":"))
        return np.arange(start, stop + 1e-12, step)
    return np.array([float(p) for p in spec.split(",")])


def cmd_synth(args):
    out = _out_dir(args)
    panel, truth = synth.generate_panel(n_particles=args.particles,
                                        n_years=args.years, seed=args.seed)
    wio.save_panel(panel, out / "panel.csv")
    _write_csv(out / "truth.csv",
               ["bin_center_asinh", "consumption_mean", "consumption_var",
                "income_drift", "income_diffusion"],
               zip(panel.grid.centers, truth.consumption_mean, truth.consumption_var,
                   truth.income_drift, truth.income_diffusion))
    _manifest(args, out, n_particles=args.particles)
    print(f"wrote {out / 'panel.csv'} and {out / 'truth.csv'}")
    return 0


def cmd_simulate(args):
    out = _out_dir(args)
    cfg_doc = wio.load_config(args.config)
    grid = cfg_doc.grid
    sim_kw = dict(cfg_doc.simulation)
    sim_kw.setdefault("rng_seed", args.seed)
    config = SimulationConfig(**sim_kw)
    if args.panel:
        panel = wio.load_panel(args.panel)
        init = panel.snapshots()[0]
        profile = DriftDiffusionProfile.from_total(
            panel.grid, panel.income_drift[0], panel.income_diffusion[0])
    else:
        economy = synth.default_economy(grid)
        from wealthdyn.fokker_planck import steady_state
        init = steady_state(economy).as_snapshot()
        profile = economy
    snaps = simulate(init, profile, config)
    rows = []
    for s in snaps:
        for i in range(s.grid.n_bins):
            rows.append((s.time, s.grid.centers[i], s.mass[i]))
    _write_csv(out / "snapshots.csv", ["year", "bin_center_asinh", "mass"], rows)
    _manifest(args, out)
    print(f"wrote {out / 'snapshots.csv'}")
    return 0


def cmd_estimate(args):
    out = _out_dir(args)
    panel = wio.load_panel(args.panel)
    bw = wio.load_config(args.config).bandwidths if args.config else None
    break_year = args.break_year if args.break_year is not None else ...
    profile, phase = estimate_from_panel(panel, bandwidths=bw, n_draws=args.draws,
                                         rng=np.random.default_rng(args.seed),
                                         break_year=break_year)
    header = ["bin_center_asinh", "consumption_var", "var_low", "var_high", "flag"]
    regimes = list(profile.consumption_mean)
    for g in regimes:
        header += [f"consumption_mean_{g}", f"mean_low_{g}", f"mean_high_{g}"]
    rows = []
    for i in range(panel.grid.n_bins):
        row = [panel.grid.centers[i], profile.consumption_var[i],
               profile.ci_var[0][i], profile.ci_var[1][i], profile.flags[i]]
        for g in regimes:
            row += [profile.consumption_mean[g][i], profile.ci_mean[g][0][i],
                    profile.ci_mean[g][1][i]]
        rows.append(row)
    _write_csv(out / "consumption_profile.csv", header, rows)
    _manifest(args, out, dropped_records=phase.n_dropped)
    print(f"wrote {out / 'consumption_profile.csv'}")
    return 0


def cmd_counterfactual(args):
    out = _out_dir(args)
    cfg_doc = wio.load_config(args.config)
    panel = wio.load_panel(args.panel)
    profiles = {}
    for k, year in enumerate(panel.years):
        profiles[float(year)] = DriftDiffusionProfile.from_total(
            panel.grid, panel.income_drift[k], panel.income_diffusion[k])
    scen_kw = dict(cfg_doc.scenario)
    for key in ("freeze_consumption", "freeze_income_drift", "freeze_income_diffusion"):
        if key in scen_kw:
            scen_kw[key] = tuple(scen_kw[key])
    scenario = Scenario(**scen_kw)
    sim_kw = dict(cfg_doc.simulation)
    sim_kw.setdefault("rng_seed", args.seed)
    config = SimulationConfig(**sim_kw)
    rng = np.random.default_rng(args.seed)
    init = Particles.singles(sample_wealth_from_snapshot(panel.snapshots()[0],
                                                         config.n_particles, rng))
    years, bench, alt = run_counterfactual(init, profiles, scenario, config, p=args.top)
    _write_csv(out / "counterfactual.csv",
               ["year", "benchmark_top_share", "scenario_top_share"],
               zip(years, bench, alt))
    _manifest(args, out, scenario=scenario.name)
    print(f"wrote {out / 'counterfactual.csv'}")
    return 0


def _tax_baseline(args):
    if args.panel:
        panel = wio.load_panel(args.panel)
        snap = panel.snapshots()[-1]
        sig2 = None  # derived from the panel's income diffusion plus estimates
        raise SystemExit("panel-based tax baselines need an estimated profile; "
                         "use the synthetic baseline for now")
    snap, sigma2, cons = wio.synthetic_baseline()
    return snap, sigma2, cons


def cmd_tax(args):
    out = _out_dir(args)
    if args.tax_command == "estate-compare":
        model = EstateModel(drift=args.mu, sigma=args.sigma, death_rate=args.delta)
        rates = _parse_rate_grid(args.rate_grid)
        annual, inherit = tax_comparison_curve(model, rates)
        _write_csv(out / "estate_compare.csv",
                   ["rate", "alpha_annual_tax", "alpha_inheritance_tax"],
                   zip(rates, annual, inherit))
        _manifest(args, out)
        print(f"wrote {out / 'estate_compare.csv'}")
        return 0

    snap, sigma2, cons = _tax_baseline(args)
    if args.tax_command == "laffer":
        rates = _parse_rate_grid(args.rate_grid)
        rows = laffer_curve(rates, args.threshold, snap, sigma2, cons,
                            epsilon=args.epsilon, eta=args.eta)
        _write_csv(out / "laffer.csv", ["rate", "revenue_static", "revenue_long_run"], rows)
        print(f"wrote {out / 'laffer.csv'}")
    elif args.tax_command == "optimum":
        best, curve = revenue_maximizing_rate(args.threshold, snap, sigma2, cons,
                                              epsilon=args.epsilon, eta=args.eta)
        _write_csv(out / "optimum.csv", ["rate", "revenue_long_run"], curve)
        (Path(out) / "optimum.json").write_text(json.dumps({"rate": best}) + "\n")
        print(f"optimum rate {best:.4f}; wrote {out / 'optimum.csv'}")
    elif args.tax_command == "rebate":
        pol = TaxPolicy.linear_above(args.rate, args.threshold, args.epsilon, args.eta)
        res = rebate_fixed_point(pol, snap, sigma2, cons)
        _write_csv(out / "rebate_density.csv", ["bin_center_asinh", "mass"],
                   zip(snap.grid.centers, res.density_after))
        (Path(out) / "rebate.json").write_text(json.dumps(
            {"rebate": res.rebate, "revenue_static": res.revenue_static,
             "revenue_long_run": res.revenue_long_run}) + "\n")
        print(f"rebate {res.rebate:.6f}; wrote {out / 'rebate_density.csv'}")
    else:
        raise SystemExit(USAGE_ERROR)
    _manifest(args, out)
    return 0


def cmd_decompose(args):
    out = _out_dir(args)
    panel = wio.load_panel(args.panel)
    k = int(np.argmin(np.abs(panel.years - args.year))) if args.year is not None else -1
    snap = panel.snapshots()[k]
    profile = DriftDiffusionProfile.from_total(panel.grid, panel.income_drift[k],
                                               panel.income_diffusion[k])
    eff = EventEffects(panel.grid, panel.Z[k], panel.Xi[k], panel.X[k])
    dec = decompose_growth(snap, profile, eff, p=args.top)
    payload = {
        "p": dec.p, "demography": dec.demography, "inheritance": dec.inheritance,
        "marriage_divorce": dec.marriage_divorce, "drift": dec.drift,
        "mobility_gradient": dec.mobility_gradient, "mobility": dec.mobility,
        "total": dec.total,
    }
    (out / "decomposition.json").write_text(json.dumps(payload, indent=2) + "\n")
    _manifest(args, out)
    print(f"wrote {out / 'decomposition.json'}")
    return 0


def cmd_phase(args):
    out = _out_dir(args)
    panel = wio.load_panel(args.panel)
    bw = wio.load_config(args.config).bandwidths if args.config else None
    phase = phase_panel_from_panel(panel, bw)
    fits = fit_panel(phase, bw)
    rows = phase_portrait(phase, fits)
    _write_csv(out / "phase.csv",
               ["bin", "center_asinh", "year", "x", "y", "fitted", "period"],
               [(r["bin"], r["center_asinh"], r["year"], r["x"], r["y"],
                 r["fitted"], r["period"]) for r in rows])
    _manifest(args, out)
    print(f"wrote {out / 'phase.csv'}")
    return 0


def cmd_serve(args):
    import uvicorn

    from wealthdyn.service import build_app

    app = build_app(panel_path=args.panel)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wealthdyn",
                                     description="wealth-distribution dynamics toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed_required=True):
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, required=seed_required,
                       help="RNG seed (required for stochastic commands)")

    p = sub.add_parser("synth", help="generate a synthetic calibration panel")
    add_common(p)
    p.add_argument("--particles", type=int, default=200_000)
    p.add_argument("--years", type=int, default=40)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="forward-simulate a panel or synthetic economy")
    add_common(p)
    p.add_argument("--config", required=True)
    p.add_argument("--panel")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimate consumption profiles from a panel")
    add_common(p)
    p.add_argument("--panel", required=True)
    p.add_argument("--config")
    p.add_argument("--break-year", type=float, default=None)
    p.add_argument("--draws", type=int, default=500)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("counterfactual", help="benchmark vs scenario top-share paths")
    add_common(p)
    p.add_argument("--panel", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--top", type=float, default=0.99)
    p.set_defaults(func=cmd_counterfactual)

    p = sub.add_parser("tax", help="wealth-tax analysis")
    tax_sub = p.add_subparsers(dest="tax_command", required=True)
    for name in ("laffer", "optimum", "rebate"):
        tp = tax_sub.add_parser(name)
        tp.add_argument("--out", default="out")
        tp.add_argument("--panel")
        tp.add_argument("--threshold", type=float, default=600.0)
        tp.add_argument("--epsilon", type=float, default=0.0)
        tp.add_argument("--eta", type=float, default=0.0)
        if name == "laffer":
            tp.add_argument("--rate-grid", default="0:0.5:0.01")
        if name == "rebate":
            tp.add_argument("--rate", type=float, required=True)
        tp.set_defaults(func=cmd_tax)
    tp = tax_sub.add_parser("estate-compare")
    tp.add_argument("--out", default="out")
    tp.add_argument("--mu", type=float, default=-0.04)
    tp.add_argument("--sigma", type=float, default=0.4)
    tp.add_argument("--delta", type=float, default=0.02)
    tp.add_argument("--rate-grid", default="0:1:0.02")
    tp.set_defaults(func=cmd_tax)

    p = sub.add_parser("decompose", help="growth decomposition at a panel year")
    add_common(p, seed_required=False)
    p.add_argument("--panel", required=True)
    p.add_argument("--year", type=float, default=None)
    p.add_argument("--top", type=float, default=0.99)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("phase", help="emit the phase-portrait table")
    add_common(p, seed_required=False)
    p.add_argument("--panel", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("serve", help="run the HTTP JSON service")
    p.add_argument("--panel")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, wio.PanelFormatError) as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
              file=sys.stderr)
        return RUN_ERROR


if __name__ == "__main__":
    sys.exit(main())
