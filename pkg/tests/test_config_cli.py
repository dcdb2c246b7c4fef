"""Configuration round-trip, harness pipelines and the CLI surface."""

import json
from pathlib import Path

import numpy as np
import pytest

from fopaeq import cli
from fopaeq.config import (
    ExperimentConfig,
    GridSpec,
    config_hash,
    default_config,
    load_config,
    parse_config,
    save_config,
)
from fopaeq.errors import ConfigError
from fopaeq.experiment import run_gridsearch, run_simulate

TINY = """
[experiment]
n_batches = 1
symbols_per_batch = 2048
n_stages = 2
training_len = 600
[kernel]
window_m = 20
block_l = 10
"""


def tiny_config(**overrides):
    cfg = parse_config(TINY)
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    return cfg


class TestConfigRoundTrip:
    def test_paper_cfg_matches_defaults(self):
        shipped = Path(__file__).resolve().parent.parent / "src/fopaeq/paper.cfg"
        assert load_config(shipped) == default_config()

    def test_save_load_identity(self, tmp_path):
        cfg = tiny_config()
        path = tmp_path / "exp.cfg"
        save_config(cfg, path)
        assert load_config(path) == cfg

    def test_hash_stability_and_sensitivity(self):
        assert config_hash(default_config()) == config_hash(default_config())
        assert config_hash(default_config()) != config_hash(tiny_config())

    def test_partial_file_fills_defaults(self):
        cfg = parse_config("[experiment]\nseed = 7\n")
        assert cfg.seed == 7
        assert cfg.kernel == default_config().kernel

    def test_missing_file_raises(self):
        with pytest.raises(ConfigError):
            load_config("/nonexistent/path.cfg")


class TestValidationPaths:
    def test_bad_value_reports_field_path(self):
        with pytest.raises(ConfigError, match="kernel.sigma"):
            parse_config("[kernel]\nsigma = banana\n")

    def test_domain_violation_reports_section(self):
        with pytest.raises(ConfigError, match="kernel"):
            parse_config("[kernel]\nsigma = -1.0\n")

    def test_fopa_field_paths(self):
        with pytest.raises(ConfigError, match="fopa.gamma"):
            parse_config("[fopa]\ngamma = -2\ntarget_peak_gain_db = off\npump_power = 0.5\n")

    def test_auto_pump_requires_target(self):
        with pytest.raises(ConfigError, match="fopa.pump_power"):
            parse_config("[fopa]\npump_power = auto\ntarget_peak_gain_db = off\n")

    def test_training_shorter_than_lag_vector(self):
        with pytest.raises(ConfigError, match="training_len"):
            parse_config("[experiment]\ntraining_len = 10\n[kernel]\nblock_l = 20\n")

    def test_nonempty_grid(self):
        with pytest.raises(ConfigError, match="grid"):
            GridSpec(m_values=())


class TestSimulatePipeline:
    def test_distortion_free_noiseless_link_is_error_free(self):
        cfg = tiny_config(
            dither=default_config().dither.__class__(amps_rad=(0.0,) * 4),
            noise_figure_db=None,
            pump_linewidth_hz=0.0,
            tx_linewidth_hz=0.0,
            rx_linewidth_hz=0.0,
        )
        metrics = run_simulate(cfg)
        assert np.all(metrics.ber_kernel == 0.0)
        assert np.all(metrics.ber_lms == 0.0)

    def test_metrics_shapes_and_csv(self, tmp_path):
        cfg = tiny_config()
        metrics = run_simulate(cfg, out_dir=tmp_path)
        assert metrics.stages.size == 2
        assert metrics.bits_total == 2048 * 4
        assert (tmp_path / "ber_vs_stage.csv").exists()
        assert (tmp_path / "rms_vs_stage.csv").exists()
        assert (tmp_path / "convergence.csv").exists()
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["seed"] == cfg.seed
        assert manifest["config_sha256"] == config_hash(cfg)

    def test_csv_headers_pinned(self, tmp_path):
        run_simulate(tiny_config(), out_dir=tmp_path)
        lines = (tmp_path / "ber_vs_stage.csv").read_text().splitlines()
        assert lines[0] == "# fopaeq.ber_vs_stage.v1"
        assert lines[1] == "stage,ber_kernel,errors_kernel,ber_lms,errors_lms,bits"
        lines = (tmp_path / "rms_vs_stage.csv").read_text().splitlines()
        assert lines[1] == "stage,rms_phase_kernel,rms_amp_kernel,rms_phase_lms,rms_amp_lms"

    def test_bit_identical_reruns(self, tmp_path):
        cfg = tiny_config()
        a = tmp_path / "a"
        b = tmp_path / "b"
        a.mkdir()
        b.mkdir()
        run_simulate(cfg, out_dir=a)
        run_simulate(cfg, out_dir=b)
        for name in ("ber_vs_stage.csv", "rms_vs_stage.csv", "convergence.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestGridPipeline:
    def test_single_cell_matches_simulate(self):
        cfg = tiny_config()
        grid = GridSpec(
            m_values=(cfg.kernel.window_m,),
            sigma_values=(cfg.kernel.sigma,),
            lambda_values=(cfg.kernel.lam,),
            symbols_budget=cfg.symbols_per_batch * cfg.n_batches,
        )
        rows, best = run_gridsearch(cfg, grid)
        metrics = run_simulate(cfg)
        assert best[3] == pytest.approx(metrics.ber_kernel[-1], abs=0)

    def test_argmin_is_minimum_by_construction(self):
        cfg = tiny_config()
        grid = GridSpec(m_values=(10, 20), sigma_values=(1.0, 10**0.5),
                        lambda_values=(0.1,), symbols_budget=2048)
        rows, best = run_gridsearch(cfg, grid)
        assert len(rows) == 4
        assert best[3] == min(r[3] for r in rows)

    def test_parallel_equals_serial(self, tmp_path):
        cfg = tiny_config()
        grid = GridSpec(m_values=(10, 20), sigma_values=(1.0,),
                        lambda_values=(0.1, 1.0), symbols_budget=2048)
        d1 = tmp_path / "serial"
        d2 = tmp_path / "parallel"
        d1.mkdir()
        d2.mkdir()
        run_gridsearch(cfg, grid, out_dir=d1, jobs=1)
        run_gridsearch(cfg, grid, out_dir=d2, jobs=2)
        assert (d1 / "grid_results.csv").read_bytes() == (d2 / "grid_results.csv").read_bytes()


class TestCli:
    def test_simulate_and_artifacts(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(TINY)
        out = tmp_path / "out"
        rc = cli.main(["simulate", "--config", str(cfg_path), "--out", str(out),
                       "--quiet"])
        assert rc == 0
        assert (out / "ber_vs_stage.csv").exists()
        assert (out / "manifest.json").exists()

    def test_seed_override_changes_hash(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(TINY)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        cli.main(["simulate", "--config", str(cfg_path), "--out", str(out1),
                  "--seed", "1", "--quiet"])
        cli.main(["simulate", "--config", str(cfg_path), "--out", str(out2),
                  "--seed", "2", "--quiet"])
        m1 = json.loads((out1 / "manifest.json").read_text())
        m2 = json.loads((out2 / "manifest.json").read_text())
        assert m1["seed"] == 1 and m2["seed"] == 2
        # continuous metrics differ across seeds (error counts may not at
        # this tiny scale where both land at zero)
        assert (out1 / "rms_vs_stage.csv").read_bytes() != (
            out2 / "rms_vs_stage.csv").read_bytes()

    def test_gain_profile_rows_and_peak(self, tmp_path):
        out = tmp_path / "gp"
        rc = cli.main(["gain-profile", "--out", str(out), "--quiet"])
        assert rc == 0
        lines = (out / "gain_profile.csv").read_text().splitlines()
        assert lines[1] == "detuning_nm,mean_amp_db,mean_phase_rad,rms_amp,rms_phase"
        rows = [ln.split(",") for ln in lines[2:]]
        assert len(rows) == 320  # +-40 nm at 0.25 nm, zero excluded
        peak = max(float(r[1]) for r in rows)
        assert abs(peak - 25.0) < 0.1

    def test_gain_profile_zero_dither_zero_rms(self, tmp_path):
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text("[dither]\namps_rad = 0, 0, 0, 0\n")
        out = tmp_path / "gp0"
        cli.main(["gain-profile", "--config", str(cfg_path), "--out", str(out),
                  "--quiet"])
        lines = (out / "gain_profile.csv").read_text().splitlines()[2:]
        for ln in lines:
            parts = ln.split(",")
            assert abs(float(parts[3])) < 1e-12
            assert abs(float(parts[4])) < 1e-12

    def test_optimize_tones_round_trips_through_parser(self, tmp_path):
        out = tmp_path / "tones"
        cfg_path = tmp_path / "exp.cfg"
        cfg_path.write_text(TINY)
        rc = cli.main(["optimize-tones", "--config", str(cfg_path), "--out",
                       str(out), "--quiet"])
        assert rc == 0
        tones = load_config(out / "tones.cfg")
        assert isinstance(tones, ExperimentConfig)
        assert len(tones.dither.amps_rad) == 4
        spectrum = (out / "tone_spectrum.csv").read_text().splitlines()
        assert spectrum[1] == "line_index,freq_ghz,power_before,power_after"
        before = np.array([float(r.split(",")[2]) for r in spectrum[2:]])
        after = np.array([float(r.split(",")[3]) for r in spectrum[2:]])
        assert np.var(after) < np.var(before)

    def test_invalid_config_exits_nonzero(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.cfg"
        cfg_path.write_text("[kernel]\nsigma = -3\n")
        rc = cli.main(["simulate", "--config", str(cfg_path), "--out",
                       str(tmp_path), "--quiet"])
        assert rc == 2
        assert "kernel" in capsys.readouterr().err
