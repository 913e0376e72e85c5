"""Separability, power baseline, and the Monte-Carlo harness."""

import json
import math

import numpy as np
import pytest

import polylrt.experiments as experiments
from polylrt.covariance import block_toeplitz
from polylrt.experiments import (
    CSV_COLUMNS,
    METHODS,
    main,
    power_statistic,
    read_records_csv,
    run_experiment,
    separability,
)
from polylrt.lrt import build_detector
from polylrt.projection import SyndromeStream
from polylrt.signalgen import ScenarioConfig, build_mixing_system, ground_truth_csd


def tiny_config(**overrides):
    base = dict(M=3, L=1, J=2, snr_db=20.0, transient_db_below=10.0,
                sigma_v2=1.0, num_snapshots=4000, T_range=(1, 2),
                num_trials=200, seed=77)
    base.update(overrides)
    return ScenarioConfig(**base)


@pytest.fixture(autouse=True)
def fast_pevd(monkeypatch):
    monkeypatch.setattr(experiments, "PEVD_RESIDUAL_TOL", 1e-4)
    monkeypatch.setattr(experiments, "PEVD_MAX_ITER", 1000)


class TestSeparability:
    def test_identical_lists(self):
        assert separability([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_hand_arithmetic(self):
        # H0 = {0, 2}: mu=1, sigma=sqrt(2); H1 = {4, 6}: mu=5, sigma=sqrt(2)
        delta = separability([0.0, 2.0], [4.0, 6.0])
        assert abs(delta - 4.0 / math.sqrt(2.0)) <= 1e-12

    def test_location_shift(self):
        rng = np.random.default_rng(0)
        h0 = rng.standard_normal(500)
        c = 2.5
        delta = separability(h0, h0 + c)
        assert abs(delta - c / h0.std(ddof=1)) <= 1e-12

    def test_requires_two_samples(self):
        with pytest.raises(ValueError):
            separability([1.0], [1.0, 2.0])

    def test_constant_lists_with_gap(self):
        assert separability([1.0, 1.0], [2.0, 2.0]) == float("inf")


class TestPowerStatistic:
    def test_zero_stream(self):
        s = SyndromeStream(np.zeros((2, 10), dtype=complex), 0)
        assert power_statistic(s, 5, 3) == 0.0

    def test_window_one_is_squared_norm(self):
        rng = np.random.default_rng(1)
        data = rng.standard_normal((3, 8)) + 1j * rng.standard_normal((3, 8))
        s = SyndromeStream(data, 0)
        assert abs(power_statistic(s, 4, 1) - np.sum(np.abs(data[:, 4]) ** 2)) < 1e-12

    def test_chi_square_mean(self):
        # white CN(0, sv2 I_d): E power = sv2 * d
        rng = np.random.default_rng(2)
        d, n, sv2, T = 3, 40_000, 0.8, 4
        data = np.sqrt(sv2 / 2.0) * (rng.standard_normal((d, n))
                                     + 1j * rng.standard_normal((d, n)))
        s = SyndromeStream(data, 0)
        vals = np.array([power_statistic(s, i, T) for i in range(T - 1, n, T)])
        se = vals.std(ddof=1) / np.sqrt(vals.size)
        assert abs(vals.mean() - sv2 * d) <= 3.0 * se

    def test_insufficient_window(self):
        s = SyndromeStream(np.zeros((2, 5), dtype=complex), 0)
        with pytest.raises(ValueError):
            power_statistic(s, 1, 3)
        with pytest.raises(ValueError):
            power_statistic(s, 7, 2)


class TestStackedWindows:
    def test_matches_stack_snapshots(self):
        from polylrt.lrt import stack_snapshots
        rng = np.random.default_rng(3)
        data = rng.standard_normal((2, 12)) + 1j * rng.standard_normal((2, 12))
        y = experiments._stacked_windows(data, 3, 4)
        for t in range(4):
            assert np.array_equal(y[t], stack_snapshots(data, 3 * t + 2, 3))

    def test_detector_dimensions(self):
        cfg = tiny_config()
        model = build_mixing_system(cfg, np.random.default_rng(4))
        r, r_t = ground_truth_csd(model, cfg.sigma_v2)
        t = 2
        r0 = block_toeplitz(r, t).matrix
        r01 = r0 + model.sigma_t2 * block_toeplitz(r_t, t).matrix
        det = build_detector(r0, r01)
        assert det.K == cfg.M * t


class TestRunExperiment:
    def test_grid_complete_and_csv_schema(self, tmp_path):
        cfg = tiny_config()
        out = tmp_path / "out.csv"
        records = run_experiment(cfg, out)
        assert len(records) == len(METHODS) * len(cfg.T_range)
        lines = out.read_text().splitlines()
        comments = [ln for ln in lines if ln.startswith("#")]
        assert any(f"seed={cfg.seed}" in ln for ln in comments)
        header = [ln for ln in lines if not ln.startswith("#")][0]
        assert header == CSV_COLUMNS
        parsed = read_records_csv(out)
        assert [(r.method, r.T) for r in parsed] == [(r.method, r.T) for r in records]

    def test_determinism_up_to_wall_time(self, tmp_path):
        cfg = tiny_config()
        a = run_experiment(cfg, tmp_path / "a.csv")
        b = run_experiment(cfg, tmp_path / "b.csv")
        for ra, rb in zip(a, b):
            assert (ra.method, ra.T, ra.status) == (rb.method, rb.T, rb.status)
            assert ra.delta == rb.delta
            assert ra.cond_H0 == rb.cond_H0 and ra.cond_H1 == rb.cond_H1

    def test_transient_is_detectable(self, tmp_path):
        records = run_experiment(tiny_config(num_trials=400), tmp_path / "o.csv")
        for rec in records:
            assert rec.status == "ok"
            assert rec.delta > 0.5

    def test_zero_transient_gives_small_deltas(self, tmp_path):
        cfg = tiny_config(transient_db_below=math.inf, num_trials=400)
        records = run_experiment(cfg, tmp_path / "o.csv")
        for rec in records:
            assert rec.delta <= 0.35

    def test_dump_writes_decompositions(self, tmp_path):
        from polylrt import polymat
        cfg = tiny_config(num_trials=50)
        run_experiment(cfg, tmp_path / "o.csv", dump_dir=tmp_path / "dump")
        for name in ("R", "Q", "Lambda", "Q_perp", "R_projected"):
            mat = polymat.load_text(tmp_path / "dump" / f"{name}.lm")
            assert mat.num_lags >= 1


class TestCli:
    def test_run_subcommand(self, tmp_path, capsys):
        cfg = tiny_config(num_trials=60)
        cfg_path = tmp_path / "cfg.json"
        cfg.to_json(cfg_path)
        out = tmp_path / "out.csv"
        code = main(["run", "--config", str(cfg_path), "--out", str(out), "--quiet"])
        assert code == 0
        assert out.exists()
        assert len(read_records_csv(out)) == len(METHODS) * len(cfg.T_range)

    def test_seed_and_trials_overrides(self, tmp_path):
        cfg = tiny_config(num_trials=60)
        cfg_path = tmp_path / "cfg.json"
        cfg.to_json(cfg_path)
        out = tmp_path / "out.csv"
        code = main(["run", "--config", str(cfg_path), "--out", str(out),
                     "--seed", "123", "--trials", "80", "--quiet"])
        assert code == 0
        text = out.read_text()
        assert "seed=123" in text
        assert json.loads(text.splitlines()[2].split("config=")[1])["num_trials"] == 80

    def test_missing_config_is_an_error(self, tmp_path):
        code = main(["run", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o.csv"), "--quiet"])
        assert code == 1

    def test_invalid_config_is_an_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"M": 2, "L": 5}))
        code = main(["run", "--config", str(bad),
                     "--out", str(tmp_path / "o.csv"), "--quiet"])
        assert code == 1
