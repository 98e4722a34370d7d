"""
Tests for the experiment runner.

Tests cover:
- Instance construction from a configuration
- Per-coordinate summaries
- Feasibility map layout and ordering
- Weight sweep CSV headers and determinism
- Rows failing the constraint re-checks
- Budget sweep, relaxation benchmark and the default configuration (slow)
"""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from noma_tradeoff.config import load_experiment_config
from noma_tradeoff.controllers import ExperimentRunner, TradeoffController, verify_solution
from noma_tradeoff.controllers import experiments
from noma_tradeoff.controllers.experiments import (
    ALPHA_COLUMNS,
    BENCHMARK_COLUMNS,
    FALLBACK,
    FEASIBILITY_COLUMNS,
    SNR_COLUMNS,
    make_instance,
    solver_settings,
    summarize,
)
from noma_tradeoff.models import AlphaSweepRow


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Keep an exported output directory out of the tests."""
    monkeypatch.delenv("NOMA_OUTPUT_DIR", raising=False)


@pytest.fixture
def tiny_config(tmp_path: Path):
    """Two users, two antennas and a short grid."""
    return load_experiment_config(
        overrides={
            "output_dir": tmp_path / "results",
            "system": {"num_antennas": 2, "distances": [1.0, 3.0]},
            "sweep": {
                "alphas": [0.0, 1.0],
                "tx_snr_db": [0.0, 30.0],
                "seeds": [0, 1],
                "eta_th": [0.01, 1.0],
            },
            "solver": {"envelope_pieces": 16},
        }
    )


class TestInstances:
    """Tests for make_instance."""

    def test_make_instance(self, tiny_config):
        """Test budgets, losses and ordering of a generated instance."""
        cs, params = make_instance(tiny_config, seed=0, tx_snr_db=10.0, eta_th=0.01)
        assert cs.ordered
        assert cs.num_users == 2
        assert params.p_ava == pytest.approx(10.0)
        assert params.p_loss == pytest.approx(10.0)
        np.testing.assert_allclose(params.sinr_thresholds, [0.01, 0.01])
        assert np.all(np.diff(cs.gains) <= 0.0)

    def test_same_seed_same_channels(self, tiny_config):
        """Test that a seed fixes the channels across grid points."""
        cs_low, _ = make_instance(tiny_config, 1, 0.0, 0.01)
        cs_high, _ = make_instance(tiny_config, 1, 30.0, 1.0)
        np.testing.assert_array_equal(cs_low.channels, cs_high.channels)


class TestSummaries:
    """Tests for summarize."""

    def test_mean_and_std(self):
        """Test per-key statistics over rows with status ok."""
        frame = pd.DataFrame(
            {
                "seed": [0, 1, 2, 0],
                "alpha": [0.5, 0.5, 0.5, 1.0],
                "se": [1.0, 3.0, 100.0, 2.0],
                "saturated": [True, False, True, False],
                "status": ["ok", "ok", "InfeasibleError", "ok"],
            }
        )
        summary = summarize(frame, ["alpha"])
        assert list(summary["alpha"]) == [0.5, 1.0]
        assert summary.loc[0, "se_mean"] == pytest.approx(2.0)
        assert summary.loc[0, "se_std"] == pytest.approx(np.sqrt(2.0))
        assert list(summary["count"]) == [2, 1]
        assert "saturated_mean" not in summary.columns
        assert "seed_mean" not in summary.columns

    def test_no_ok_rows(self):
        """Test that a frame without usable rows gives an empty summary."""
        frame = pd.DataFrame({"seed": [0], "alpha": [0.5], "se": [1.0], "status": ["failed"]})
        summary = summarize(frame, ["alpha"])
        assert summary.empty
        assert list(summary.columns) == ["alpha", "count"]


class TestRunner:
    """Tests for ExperimentRunner."""

    def test_feasibility_map(self, tiny_config):
        """Test row order, headers and monotonicity in the budget."""
        path = ExperimentRunner(tiny_config).run_feasibility_map()
        assert path.name == "feasibility.v1.csv"
        assert (path.parent / "feasibility_summary.v1.csv").is_file()

        frame = pd.read_csv(path)
        assert list(frame.columns) == FEASIBILITY_COLUMNS
        assert len(frame) == 8
        assert list(frame["eta_th"]) == [0.01] * 4 + [1.0] * 4
        assert list(frame["tx_snr_db"][:4]) == [0.0, 0.0, 30.0, 30.0]
        assert list(frame["seed"][:4]) == [0, 1, 0, 1]
        for _, group in frame.groupby(["seed", "eta_th"]):
            assert group["p_star_w"].nunique() == 1
            assert group["feasible"].is_monotonic_increasing

    @pytest.mark.slow
    def test_parallel_matches_inline(self, tiny_config):
        """Test that the process pool reproduces the inline rows."""
        inline = pd.read_csv(ExperimentRunner(tiny_config).run_feasibility_map())
        pooled = pd.read_csv(ExperimentRunner(tiny_config, jobs=2).run_feasibility_map())
        pd.testing.assert_frame_equal(inline, pooled)

    @pytest.mark.slow
    def test_alpha_sweep(self, tiny_config):
        """Test headers, coverage and run-to-run determinism of the weight sweep."""
        cfg = tiny_config.model_copy(
            update={"sweep": tiny_config.sweep.model_copy(update={"seeds": [0], "tx_snr_db": [20.0]})}
        )
        runner = ExperimentRunner(cfg)
        first = runner.run_alpha_sweep().read_text()
        path = runner.run_alpha_sweep()
        assert path.read_text() == first

        frame = pd.read_csv(path)
        assert list(frame.columns) == ALPHA_COLUMNS
        assert list(frame["alpha"]) == [0.0, 1.0]
        assert set(frame["status"]) <= {"ok", "se_max_fallback"}
        assert np.all(frame["tx_power_w"] <= 100.0 * (1.0 + 1e-6))

    def test_infeasible_cells(self, tiny_config):
        """Test that thresholds beyond the budget mark every cell infeasible."""
        cfg = tiny_config.model_copy(
            update={
                "sweep": tiny_config.sweep.model_copy(
                    update={"eta_th": [1e3], "tx_snr_db": [0.0, 20.0], "seeds": [0]}
                )
            }
        )
        frame = pd.read_csv(ExperimentRunner(cfg).run_feasibility_map())
        assert len(frame) == 2
        assert list(frame["status"]) == ["ok", "ok"]
        assert not frame["feasible"].any()
        assert np.all(frame["p_star_w"] > frame["p_ava_w"])

    def test_rejected_rows_are_kept_apart(self, tiny_config, monkeypatch):
        """Test that rows failing the re-checks go to their own file and skip the summary."""

        def fake_cell(cfg, seed, tx_snr_db):
            base = {"seed": seed, "tx_snr_db": tx_snr_db, "se": 1.0, "gee": 2.0, "tx_power_w": 0.5}
            return [
                AlphaSweepRow(**base, alpha=0.0),
                AlphaSweepRow(**base, alpha=1.0, status="violates:rate"),
            ]

        monkeypatch.setattr(experiments, "tradeoff_cell", fake_cell)
        path = ExperimentRunner(tiny_config).run_alpha_sweep()
        rejected_path = path.parent / "alpha_sweep_rejected.v1.csv"

        frame = pd.read_csv(path)
        assert len(frame) == 4
        assert set(frame["status"]) == {"ok"}
        rejected = pd.read_csv(rejected_path)
        assert list(rejected.columns) == ALPHA_COLUMNS
        assert len(rejected) == 4
        assert set(rejected["status"]) == {"violates:rate"}
        summary = pd.read_csv(path.parent / "alpha_sweep_summary.v1.csv")
        assert list(summary["alpha"]) == [0.0, 0.0]
        assert list(summary["count"]) == [2, 2]

        def clean_cell(cfg, seed, tx_snr_db):
            return fake_cell(cfg, seed, tx_snr_db)[:1]

        monkeypatch.setattr(experiments, "tradeoff_cell", clean_cell)
        ExperimentRunner(tiny_config).run_alpha_sweep()
        assert not rejected_path.exists()

    @pytest.mark.slow
    def test_snr_sweep(self, tiny_config):
        """Test saturation flags and the green power of the budget sweep."""
        cfg = tiny_config.model_copy(
            update={"sweep": tiny_config.sweep.model_copy(update={"seeds": [0]})}
        )
        path = ExperimentRunner(cfg).run_snr_sweep()
        assert path.name == "snr_sweep.v1.csv"

        frame = pd.read_csv(path)
        assert list(frame.columns) == SNR_COLUMNS
        assert list(frame["alpha"]) == [0.0, 0.0, 1.0, 1.0]
        assert list(frame["tx_snr_db"]) == [0.0, 30.0, 0.0, 30.0]
        assert set(frame["status"]) <= {"ok", FALLBACK}
        assert not frame.loc[frame["alpha"] == 0.0, "saturated"].any()
        assert list(frame.loc[frame["alpha"] == 1.0, "saturated"]) == [False, True]
        np.testing.assert_allclose(frame["green_power_w"], 1000.0)

    @pytest.mark.slow
    def test_benchmark_table(self, tiny_config):
        """Test that the trade-off never beats the relaxation lower bound."""
        cfg = tiny_config.model_copy(
            update={"sweep": tiny_config.sweep.model_copy(update={"seeds": [0]})}
        )
        path = ExperimentRunner(cfg).run_benchmark_table()
        assert path.name == "benchmark.v1.csv"

        frame = pd.read_csv(path)
        assert list(frame.columns) == BENCHMARK_COLUMNS
        assert list(frame["alpha"]) == [0.0, 1.0]
        assert set(frame["status"]) <= {"ok", "rank_failure"}
        assert np.all(frame["gap"] >= -1e-4)
        assert np.all((frame["max_rank_ratio"] >= 0.0) & (frame["max_rank_ratio"] <= 1.0))
        assert np.all(frame["sdr_power_w"] > 0.0)


@pytest.mark.slow
class TestReferenceSetup:
    """Runs on the default three-antenna, five-user configuration."""

    @pytest.fixture
    def reference(self):
        """Defaults without any configuration file."""
        return load_experiment_config()

    @pytest.mark.parametrize("tx_snr_db", [5.0, 25.0])
    @pytest.mark.parametrize("seed", range(3))
    def test_normalize_and_solve(self, reference, seed, tx_snr_db):
        """Test that the normalization and a mid-weight solve succeed on every default seed."""
        cs, params = make_instance(reference, seed, tx_snr_db, 1e-2)
        tradeoff = TradeoffController(solver_settings(reference))
        f1_star, f2_star = tradeoff.normalize(cs, params)
        assert f1_star > 0.0
        assert f2_star > 0.0

        solution, trace = tradeoff.solve_tradeoff(
            cs, params, 0.5, tradeoff.default_config(0.5, f1_star, f2_star)
        )
        assert trace.is_monotone()
        assert verify_solution(solution, cs, params) == []

    def test_weight_trend(self, reference):
        """Test that SE falls and GEE rises as the weight moves from SE to GEE."""
        cs, params = make_instance(reference, 0, 25.0, 1e-2)
        tradeoff = TradeoffController(solver_settings(reference))
        f1_star, f2_star = tradeoff.normalize(cs, params)
        cfg = tradeoff.default_config(0.0, f1_star, f2_star)
        solutions = [tradeoff.solve_tradeoff(cs, params, a, cfg)[0] for a in (0.0, 0.5, 1.0)]
        se = [s.se for s in solutions]
        gee = [s.gee for s in solutions]

        assert se[0] >= se[1] * (1.0 - 1e-2)
        assert se[1] >= se[2] * (1.0 - 1e-2)
        assert gee[2] >= gee[1] * (1.0 - 1e-2)
        assert gee[1] >= gee[0] * (1.0 - 1e-2)
        assert se[0] > se[2]
        assert gee[2] > gee[0]
