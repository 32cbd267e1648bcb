import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from wealthdyn import io as wio
from wealthdyn.cli import main
from wealthdyn.estimator import Bandwidths
from wealthdyn.grid import WealthGrid


def tiny_panel(n_years=3, seed=0):
    grid = WealthGrid.from_range(0.0, 1.0, 0.1)
    rng = np.random.default_rng(seed)
    years = 2000.0 + np.arange(n_years)
    mass = rng.random((n_years, grid.n_bins))
    mass /= mass.sum(axis=1, keepdims=True)
    shape = (n_years, grid.n_bins)
    return wio.Panel(grid, years, mass,
                     income_drift=rng.normal(0, 1, shape),
                     income_diffusion=rng.random(shape),
                     Z=rng.normal(0, 0.01, shape),
                     Xi=rng.normal(0, 0.01, shape),
                     X=rng.normal(0, 0.01, shape),
                     break_year=2001.0)


class TestPanelRoundTrip:
    def test_save_load_bit_identical(self, tmp_path):
        panel = tiny_panel()
        path = tmp_path / "panel.csv"
        wio.save_panel(panel, path)
        loaded = wio.load_panel(path)
        assert np.array_equal(loaded.years, panel.years)
        for name in ("mass", "income_drift", "income_diffusion", "Z", "Xi", "X"):
            assert np.array_equal(getattr(loaded, name), getattr(panel, name)), name
        assert loaded.break_year == panel.break_year
        # a second round trip is byte-identical
        path2 = tmp_path / "panel2.csv"
        wio.save_panel(loaded, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_shuffled_rows_same_panel(self, tmp_path):
        panel = tiny_panel()
        path = tmp_path / "panel.csv"
        wio.save_panel(panel, path)
        lines = path.read_text().splitlines()
        head = [l for l in lines if l.startswith("#")] + \
            [l for l in lines if l.startswith("year,")]
        data = [l for l in lines if not l.startswith("#") and not l.startswith("year,")]
        rng = np.random.default_rng(1)
        rng.shuffle(data)
        shuffled = tmp_path / "shuffled.csv"
        shuffled.write_text("\n".join(head + data) + "\n")
        loaded = wio.load_panel(shuffled)
        assert np.array_equal(loaded.mass, panel.mass)

    def test_nan_cell_rejected_with_location(self, tmp_path):
        panel = tiny_panel()
        path = tmp_path / "panel.csv"
        wio.save_panel(panel, path)
        text = path.read_text().replace(repr(float(panel.mass[1, 3])), "nan", 1)
        bad = tmp_path / "bad.csv"
        bad.write_text(text)
        with pytest.raises(wio.PanelFormatError, match=r"bad\.csv:\d+"):
            wio.load_panel(bad)

    def test_missing_rows_rejected(self, tmp_path):
        panel = tiny_panel()
        path = tmp_path / "panel.csv"
        wio.save_panel(panel, path)
        lines = path.read_text().splitlines()
        trimmed = tmp_path / "trimmed.csv"
        trimmed.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(wio.PanelFormatError, match="missing row"):
            wio.load_panel(trimmed)

    def test_off_grid_bin_rejected(self, tmp_path):
        panel = tiny_panel()
        path = tmp_path / "panel.csv"
        wio.save_panel(panel, path)
        text = path.read_text().replace("0.05", "0.04", 1)
        bad = tmp_path / "bad.csv"
        bad.write_text(text)
        with pytest.raises(wio.PanelFormatError, match="not on the grid"):
            wio.load_panel(bad)


class TestRunConfig:
    def test_load_defaults_and_sections(self, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text(
            "[grid]\nlower_asinh = -0.5\nupper_asinh = 2.0\nbin_width = 0.1\n"
            "[bandwidths]\nincome_mean_years = 10.0\n"
            "[simulation]\ndt = 0.2\nn_runs = 3\n")
        rc = wio.load_config(cfg)
        assert rc.grid.n_bins == 25
        assert rc.bandwidths.income_mean_years == 10.0
        assert rc.bandwidths.survival_years == 2.0  # untouched default
        assert rc.simulation == {"dt": 0.2, "n_runs": 3}

    def test_unknown_section_rejected(self, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text("[taxes]\nrate = 0.1\n")
        with pytest.raises(ValueError, match="unknown config section"):
            wio.load_config(cfg)

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text("[bandwidths]\nbandwidht = 2.0\n")
        with pytest.raises(ValueError, match="unknown keys"):
            wio.load_config(cfg)

    def test_nonpositive_bandwidth_rejected(self, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text("[bandwidths]\nsurvival_years = 0.0\n")
        with pytest.raises(ValueError, match="must be positive"):
            wio.load_config(cfg)


class TestCli:
    def test_tax_laffer_writes_curve(self, tmp_path):
        out = tmp_path / "laffer"
        rc = main(["tax", "laffer", "--out", str(out), "--rate-grid", "0:0.2:0.1",
                   "--epsilon", "1", "--eta", "1"])
        assert rc == 0
        lines = (out / "laffer.csv").read_text().splitlines()
        assert lines[0] == "rate,revenue_static,revenue_long_run"
        assert len(lines) == 4
        first = [float(v) for v in lines[1].split(",")]
        assert first == [0.0, 0.0, 0.0]
        assert (out / "manifest.json").exists()

    def test_tax_estate_compare(self, tmp_path):
        out = tmp_path / "estate"
        rc = main(["tax", "estate-compare", "--out", str(out),
                   "--rate-grid", "0,0.5,1.0"])
        assert rc == 0
        lines = (out / "estate_compare.csv").read_text().splitlines()
        rows = [list(map(float, l.split(","))) for l in lines[1:]]
        assert_allclose(rows[0][1], 1.5, atol=1e-9)     # no-tax tail exponent
        assert_allclose(rows[2][2], 1.65139, atol=1e-4)  # full inheritance tax

    def test_simulate_zero_dynamics_config(self, tmp_path):
        cfg = tmp_path / "zero.toml"
        cfg.write_text(
            "[grid]\nlower_asinh = -1.0\nupper_asinh = 2.0\nbin_width = 0.1\n"
            "[simulation]\ndt = 0.5\nhorizon = 2.0\nn_particles = 500\nn_runs = 3\n")
        panel_dir = tmp_path / "sim"
        # build a zero-dynamics panel to drive the simulation
        grid = WealthGrid.from_range(-1.0, 2.0, 0.1)
        mass = np.exp(-0.5 * (grid.centers - 0.5) ** 2)
        mass /= mass.sum()
        shape = (1, grid.n_bins)
        panel = wio.Panel(grid, np.array([2000.0]), mass[None, :],
                          np.zeros(shape), np.zeros(shape),
                          np.zeros(shape), np.zeros(shape), np.zeros(shape))
        panel_path = tmp_path / "panel.csv"
        wio.save_panel(panel, panel_path)
        rc = main(["simulate", "--config", str(cfg), "--panel", str(panel_path),
                   "--out", str(panel_dir), "--seed", "3"])
        assert rc == 0
        rows = (panel_dir / "snapshots.csv").read_text().splitlines()[1:]
        data = np.array([list(map(float, r.split(","))) for r in rows])
        years = np.unique(data[:, 0])
        first = data[data[:, 0] == years[0]][:, 2]
        last = data[data[:, 0] == years[-1]][:, 2]
        assert_allclose(last, first, atol=1e-12)

    def test_estimate_runs_on_synthetic_panel(self, tmp_path):
        from wealthdyn.synth import generate_panel

        panel, truth = generate_panel(n_particles=20_000, n_years=12, switch_year=6,
                                      dt=0.1, seed=5)
        panel_path = tmp_path / "panel.csv"
        wio.save_panel(panel, panel_path)
        out = tmp_path / "est"
        rc = main(["estimate", "--panel", str(panel_path), "--out", str(out),
                   "--seed", "1", "--draws", "20"])
        assert rc == 0
        lines = (out / "consumption_profile.csv").read_text().splitlines()
        assert lines[0].startswith("bin_center_asinh,consumption_var")
        assert len(lines) == panel.grid.n_bins + 1

    def test_usage_error_exit_code(self):
        assert main(["tax"]) == 2
        assert main(["bogus"]) == 2

    def test_runtime_error_json_on_stderr(self, tmp_path, capsys):
        rc = main(["estimate", "--panel", str(tmp_path / "nope.csv"),
                   "--out", str(tmp_path), "--seed", "1"])
        assert rc == 1
        err = capsys.readouterr().err
        payload = json.loads(err.strip().splitlines()[-1])
        assert "error" in payload and "detail" in payload

    def test_entry_point_installed(self):
        exe = shutil.which("wealthdyn")
        if exe is None:
            pytest.skip("console script not on PATH")
        res = subprocess.run([exe, "--help"], capture_output=True, text=True)
        assert res.returncode == 0
        assert "subcommands" in res.stdout or "usage" in res.stdout.lower()
