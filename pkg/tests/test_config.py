"""
Tests for solver settings and experiment configuration.

Tests cover:
- Environment overrides of solver settings
- Field validation and ConfigurationError propagation
- Sectioned TOML experiment files and command line overrides
"""

from pathlib import Path

import pytest

from noma_tradeoff.config import NomaSettings, load_experiment_config, reload_settings
from noma_tradeoff.config.experiment import SweepBlock, SystemBlock
from noma_tradeoff.exceptions import ConfigurationError


@pytest.fixture
def sweep_file(tmp_path: Path) -> Path:
    """A small experiment file overriding a few keys of every section."""
    path = tmp_path / "sweep.toml"
    path.write_text(
        """
output_dir = "from-file"

[system]
num_antennas = 2
distances = [1.0, 3.0]

[sweep]
alphas = [0.25]
seeds = [4, 5]

[solver]
envelope_pieces = 16
surrogate = "taylor"
"""
    )
    return path


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Keep NOMA_ variables of the developer shell out of the tests."""
    for name in ("NOMA_OUTPUT_DIR", "NOMA_SOLVER_TOL", "NOMA_LOG_LEVEL", "NOMA_JOBS"):
        monkeypatch.delenv(name, raising=False)
    reload_settings()


class TestNomaSettings:
    """Tests for NomaSettings."""

    def test_defaults(self):
        """Test documented defaults."""
        settings = NomaSettings(_env_file=None)
        assert settings.solver_tol == 1e-7
        assert settings.envelope_pieces == 64
        assert settings.surrogate == "conservative"
        assert settings.output_dir is None

    def test_environment_override(self, monkeypatch):
        """Test that NOMA_ variables override defaults."""
        monkeypatch.setenv("NOMA_SOLVER_TOL", "1e-6")
        monkeypatch.setenv("NOMA_JOBS", "4")
        settings = NomaSettings(_env_file=None)
        assert settings.solver_tol == 1e-6
        assert settings.jobs == 4

    def test_log_level_normalized(self):
        """Test that log levels are upper-cased."""
        assert NomaSettings(_env_file=None, log_level="debug").log_level == "DEBUG"

    def test_invalid_log_level(self):
        """Test that unknown log levels raise ConfigurationError."""
        with pytest.raises(ConfigurationError):
            NomaSettings(_env_file=None, log_level="chatty")

    def test_output_dir_must_not_be_file(self, tmp_path):
        """Test that the output directory cannot be an existing file."""
        target = tmp_path / "taken"
        target.write_text("x")
        with pytest.raises(ConfigurationError):
            NomaSettings(_env_file=None, output_dir=target)

    def test_out_of_range_environment_value(self, monkeypatch):
        """Test that a field constraint failure from the environment is a ConfigurationError."""
        monkeypatch.setenv("NOMA_JOBS", "0")
        with pytest.raises(ConfigurationError) as exc_info:
            reload_settings()
        assert exc_info.value.details["errors"][0]["loc"] == ("jobs",)
        monkeypatch.delenv("NOMA_JOBS")
        assert reload_settings().jobs == 1


class TestExperimentConfig:
    """Tests for experiment files."""

    def test_defaults_without_file(self):
        """Test the reference setup used when no file is given."""
        cfg = load_experiment_config()
        assert cfg.system.num_users == 5
        assert cfg.system.num_antennas == 3
        assert cfg.sweep.seeds == list(range(20))
        assert cfg.output_dir == Path("results")

    def test_file_values(self, sweep_file):
        """Test that file values replace defaults section by section."""
        cfg = load_experiment_config(sweep_file)
        assert cfg.system.num_antennas == 2
        assert cfg.system.num_users == 2
        assert cfg.system.p_loss_dbm == 40.0
        assert cfg.sweep.alphas == [0.25]
        assert cfg.solver.surrogate == "taylor"
        assert cfg.output_dir == Path("from-file")

    def test_overrides_take_precedence(self, sweep_file, tmp_path):
        """Test that command line values win over the file."""
        cfg = load_experiment_config(
            sweep_file, {"sweep": {"seeds": [9]}, "output_dir": tmp_path / "cli"}
        )
        assert cfg.sweep.seeds == [9]
        assert cfg.sweep.alphas == [0.25]
        assert cfg.output_dir == tmp_path / "cli"

    def test_environment_output_dir(self, sweep_file, tmp_path, monkeypatch):
        """Test that NOMA_OUTPUT_DIR replaces the file's output directory."""
        monkeypatch.setenv("NOMA_OUTPUT_DIR", str(tmp_path / "env"))
        reload_settings()
        try:
            cfg = load_experiment_config(sweep_file)
            assert cfg.output_dir == tmp_path / "env"
        finally:
            monkeypatch.delenv("NOMA_OUTPUT_DIR")
            reload_settings()

    def test_missing_file(self, tmp_path):
        """Test that a missing file raises ConfigurationError."""
        with pytest.raises(ConfigurationError):
            load_experiment_config(tmp_path / "absent.toml")

    def test_empty_seeds(self):
        """Test that an empty seed list is a configuration error."""
        with pytest.raises(ConfigurationError):
            load_experiment_config(overrides={"sweep": {"seeds": []}})

    def test_unknown_key(self, tmp_path):
        """Test that misspelled keys are rejected."""
        path = tmp_path / "typo.toml"
        path.write_text("[sweep]\nalpha = [0.5]\n")
        with pytest.raises(ConfigurationError):
            load_experiment_config(path)

    def test_block_validators(self):
        """Test the per-block validators."""
        with pytest.raises(ConfigurationError):
            SweepBlock(alphas=[0.5, 1.5])
        with pytest.raises(ConfigurationError):
            SweepBlock(eta_th=[-0.1])
        with pytest.raises(ConfigurationError):
            SystemBlock(distances=[1.0, -2.0])
        with pytest.raises(ConfigurationError):
            load_experiment_config(overrides={"sweep": {"benchmark_eta_th": 0.0}})
