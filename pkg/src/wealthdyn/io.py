"""Data ingestion and serialization: the panel CSV format, TOML run
configuration, and synthetic calibration generators.

A panel file is a CSV with a `# key = value` header manifest carrying the grid
specification, units, and break year, followed by one row per (year, bin):
year, bin_center_asinh, mass, income_drift, income_diffusion, Z, Xi, X.
Income moments are linear-scale; Z/Xi/X are cumulative CDF-level event-effect
rates at bin upper edges. All monetary columns are multiples of average
national income.
"""

from __future__ import annotations

import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from wealthdyn.estimator import Bandwidths
from wealthdyn.grid import DistributionSnapshot, WealthGrid

PANEL_COLUMNS = ["year", "bin_center_asinh", "mass", "income_drift",
                 "income_diffusion", "Z", "Xi", "X"]
UNITS = "multiples_of_average_national_income"


@dataclass
class Panel:
    """In-memory panel: yearly snapshots plus income and event-effect arrays."""

    grid: WealthGrid
    years: np.ndarray                  # (n_years,)
    mass: np.ndarray                   # (n_years, n_bins)
    income_drift: np.ndarray           # (n_years, n_bins), linear scale
    income_diffusion: np.ndarray
    Z: np.ndarray
    Xi: np.ndarray
    X: np.ndarray
    break_year: float | None = None

    def snapshots(self) -> list[DistributionSnapshot]:
        return [DistributionSnapshot(float(y), self.grid, self.mass[k])
                for k, y in enumerate(self.years)]

    def effects_total(self) -> np.ndarray:
        """(n_years, n_bins) summed CDF-level corrections."""
        return self.Z + self.Xi + self.X


class PanelFormatError(ValueError):
    pass


def save_panel(panel: Panel, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write("# wealthdyn panel v1\n")
        fh.write(f"# grid_lower_asinh = {panel.grid.lower_asinh!r}\n")
        fh.write(f"# grid_bin_width = {panel.grid.bin_width!r}\n")
        fh.write(f"# grid_n_bins = {panel.grid.n_bins}\n")
        fh.write(f"# units = {UNITS}\n")
        break_repr = "" if panel.break_year is None else repr(float(panel.break_year))
        fh.write(f"# break_year = {break_repr}\n")
        writer = csv.writer(fh)
        writer.writerow(PANEL_COLUMNS)
        centers = panel.grid.centers
        for k, year in enumerate(panel.years):
            for i in range(panel.grid.n_bins):
                writer.writerow([
                    repr(float(year)), repr(float(centers[i])),
                    repr(float(panel.mass[k, i])),
                    repr(float(panel.income_drift[k, i])),
                    repr(float(panel.income_diffusion[k, i])),
                    repr(float(panel.Z[k, i])), repr(float(panel.Xi[k, i])),
                    repr(float(panel.X[k, i])),
                ])


def load_panel(path) -> Panel:
    """Parse and validate a panel file; errors carry line numbers.

    Rows may arrive in any order: the load keys rows by (year, bin).
    """
    path = Path(path)
    manifest: dict[str, str] = {}
    rows = []
    with path.open() as fh:
        lineno = 0
        header_seen = False
        reader = None
        for raw in fh:
            lineno += 1
            if raw.startswith("#"):
                body = raw[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    manifest[key.strip()] = value.strip()
                continue
            if not raw.strip():
                continue
            cells = next(csv.reader([raw]))
            if not header_seen:
                if cells != PANEL_COLUMNS:
                    raise PanelFormatError(
                        f"{path}:{lineno}: expected header {PANEL_COLUMNS}, got {cells}")
                header_seen = True
                continue
            if len(cells) != len(PANEL_COLUMNS):
                raise PanelFormatError(f"{path}:{lineno}: expected "
                                       f"{len(PANEL_COLUMNS)} columns, got {len(cells)}")
            try:
                values = [float(c) for c in cells]
            except ValueError as exc:
                raise PanelFormatError(f"{path}:{lineno}: {exc}") from None
            for col, v in zip(PANEL_COLUMNS, values):
                if not np.isfinite(v):
                    raise PanelFormatError(f"{path}:{lineno}: non-finite {col}")
            rows.append((lineno, values))

    for key in ("grid_lower_asinh", "grid_bin_width", "grid_n_bins", "units"):
        if key not in manifest:
            raise PanelFormatError(f"{path}: missing manifest key {key!r}")
    if manifest["units"] != UNITS:
        raise PanelFormatError(f"{path}: unsupported units {manifest['units']!r}")
    grid = WealthGrid(lower_asinh=float(manifest["grid_lower_asinh"]),
                      bin_width=float(manifest["grid_bin_width"]),
                      n_bins=int(manifest["grid_n_bins"]))
    break_year = None
    if manifest.get("break_year"):
        break_year = float(manifest["break_year"])

    centers = grid.centers
    years = sorted({v[0] for _, v in rows})
    year_pos = {y: k for k, y in enumerate(years)}
    n_years, n_bins = len(years), grid.n_bins
    arrays = {name: np.full((n_years, n_bins), np.nan)
              for name in PANEL_COLUMNS[2:]}
    for lineno, values in rows:
        rec = dict(zip(PANEL_COLUMNS, values))
        diffs = np.abs(centers - rec["bin_center_asinh"])
        i = int(np.argmin(diffs))
        if diffs[i] > 1e-9 * max(1.0, abs(rec["bin_center_asinh"])) + 1e-12:
            raise PanelFormatError(
                f"{path}:{lineno}: bin center {rec['bin_center_asinh']} not on the grid")
        k = year_pos[rec["year"]]
        for name in PANEL_COLUMNS[2:]:
            arrays[name][k, i] = rec[name]
    missing = np.argwhere(np.isnan(arrays["mass"]))
    if len(missing):
        k, i = missing[0]
        raise PanelFormatError(
            f"{path}: missing row for year {years[k]}, bin {i} (and "
            f"{len(missing) - 1} more)")
    return Panel(grid, np.asarray(years, dtype=float), arrays["mass"],
                 arrays["income_drift"], arrays["income_diffusion"],
                 arrays["Z"], arrays["Xi"], arrays["X"], break_year)


# --- run configuration -----------------------------------------------------

_KNOWN_SECTIONS = {
    "grid": {"lower_asinh", "upper_asinh", "bin_width", "n_bins"},
    "bandwidths": {"income_mean_years", "income_variance_asinh",
                   "log_density_slope_asinh", "survival_years", "effects_years",
                   "error_variance_years", "diffusion_derivative_asinh", "delta"},
    "simulation": {"dt", "horizon", "n_particles", "n_runs", "rng_seed",
                   "demography", "inheritance", "marriage", "output_interval",
                   "reflect_lower"},
    "estimation": {"break_year", "n_bootstrap_draws"},
    "tax": {"threshold", "rates", "epsilon", "eta", "avg_income_usd"},
    "service": {"host", "port"},
    "scenario": {"name", "from_year", "freeze_consumption", "freeze_income_drift",
                 "freeze_income_diffusion", "scale_growth", "freeze_estate_year",
                 "freeze_demography_year"},
}


@dataclass
class RunConfig:
    """Validated key-value configuration (TOML with fixed sections)."""

    grid: WealthGrid
    bandwidths: Bandwidths
    simulation: dict = field(default_factory=dict)
    estimation: dict = field(default_factory=dict)
    tax: dict = field(default_factory=dict)
    service: dict = field(default_factory=dict)
    scenario: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def load_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    for section, keys in data.items():
        if section not in _KNOWN_SECTIONS:
            raise ValueError(f"unknown config section {section!r}")
        if isinstance(keys, dict):
            unknown = set(keys) - _KNOWN_SECTIONS[section]
            if unknown:
                raise ValueError(f"unknown keys in [{section}]: {sorted(unknown)}")

    gspec = data.get("grid", {})
    if "n_bins" in gspec:
        grid = WealthGrid(lower_asinh=float(gspec.get("lower_asinh", np.arcsinh(-1.0))),
                          bin_width=float(gspec.get("bin_width", 0.1)),
                          n_bins=int(gspec["n_bins"]))
    elif "upper_asinh" in gspec:
        grid = WealthGrid.from_range(float(gspec["lower_asinh"]),
                                     float(gspec["upper_asinh"]),
                                     float(gspec.get("bin_width", 0.1)))
    else:
        grid = WealthGrid.default()
    bw = Bandwidths(**data.get("bandwidths", {}))
    return RunConfig(grid=grid, bandwidths=bw,
                     simulation=data.get("simulation", {}),
                     estimation=data.get("estimation", {}),
                     tax=data.get("tax", {}),
                     service=data.get("service", {}),
                     scenario=data.get("scenario", {}),
                     raw=data)


def config_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def write_manifest(out_dir, args: dict) -> None:
    """Reproducibility record: config hash, seed, package versions."""
    import scipy

    from wealthdyn import __version__

    meta = {
        "wealthdyn": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": sys.version.split()[0],
    }
    meta.update(args)
    out = Path(out_dir) / "manifest.json"
    out.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


# --- synthetic calibrations -------------------------------------------------

def synthetic_baseline(grid: WealthGrid | None = None, alpha: float = 1.5,
                       sigma2_scale: float = 0.16, sigma2_floor: float = 0.04,
                       consumption_rate: float = 0.18, pareto_from: float = 5.0):
    """Pareto-tail baseline with proportional mobility, for the tax lab.

    The density is Pareto(alpha) above `pareto_from` and flat (per unit
    wealth) below it; sigma^2 = floor + scale * w^2 so mobility does not
    degenerate at low wealth (which is what lets a lump-sum rebate lift the
    bottom). Returns (snapshot, sigma2(w), c(w)).
    """
    if grid is None:
        grid = WealthGrid(lower_asinh=float(np.arcsinh(0.25)), bin_width=0.02,
                          n_bins=690)
    w_edges = np.sinh(grid.edges)
    w_b = pareto_from
    if w_edges[0] <= 0 or w_edges[0] >= w_b:
        raise ValueError("baseline grid must start inside (0, pareto_from)")
    # continuous density: alpha/w_b at the junction, Pareto above, flat below
    low = np.clip(w_edges, None, w_b)
    mass_low = (alpha / w_b) * np.diff(low)
    tail = np.clip(w_edges, w_b, None)
    mass_high = (tail[:-1] / w_b) ** (-alpha) - (tail[1:] / w_b) ** (-alpha)
    mass = mass_low + mass_high
    snap = DistributionSnapshot(0.0, grid, mass / mass.sum())

    def sigma2(w):
        return sigma2_floor + sigma2_scale * np.asarray(w, dtype=float) ** 2

    def consumption(w):
        return 0.03 + consumption_rate * np.asarray(w, dtype=float)

    return snap, sigma2, consumption
