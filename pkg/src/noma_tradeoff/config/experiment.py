"""
Experiment configuration loaded from sectioned TOML files.

A file looks like::

    output_dir = "results"

    [system]
    num_antennas = 3
    distances = [1.0, 2.0, 3.0, 4.0, 50.0]
    p_loss_dbm = 40.0

    [sweep]
    alphas = [0.0, 0.5, 1.0]
    tx_snr_db = [5.0, 25.0]
    seeds = [0, 1, 2]
    eta_th = [0.01]

    [solver]
    eps = 1e-3
    envelope_pieces = 64

Missing keys fall back to the reference simulation setup. Command line
flags override file values; the environment may override only the output
directory (``NOMA_OUTPUT_DIR``).
"""

from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    TomlConfigSettingsSource,
)

from ..exceptions import ConfigurationError
from .settings import get_settings


class SystemBlock(BaseModel):
    """Physical layer parameters of a sweep."""

    model_config = ConfigDict(extra="forbid")

    num_antennas: int = Field(default=3, description="Transmit antennas N", ge=1)
    distances: list[float] = Field(
        default_factory=lambda: [1.0, 2.0, 3.0, 4.0, 50.0],
        description="User distances in meters; their count fixes K",
    )
    path_loss_exp: float = Field(default=1.0, description="Path loss exponent", ge=0.0)
    noise_var: float = Field(default=1.0, description="Noise variance in watts", gt=0.0)
    eps0: float = Field(default=0.65, description="Amplifier efficiency", gt=0.0, le=1.0)
    p_loss_dbm: float = Field(default=40.0, description="Circuit losses in dBm")
    bandwidth_hz: float = Field(default=1e6, description="Reporting bandwidth", gt=0.0)

    @field_validator("distances")
    @classmethod
    def validate_distances(cls, v: list[float]) -> list[float]:
        """Validate that at least one user exists and all distances are positive."""
        if not v:
            raise ConfigurationError("At least one user distance is required")
        if any(d <= 0.0 for d in v):
            raise ConfigurationError(
                "User distances must be positive", details={"distances": v}
            )
        return v

    @property
    def num_users(self) -> int:
        return len(self.distances)


class SweepBlock(BaseModel):
    """Grids swept by the experiment runners."""

    model_config = ConfigDict(extra="forbid")

    alphas: list[float] = Field(
        default_factory=lambda: [0.0, 0.5, 1.0], description="Trade-off weights"
    )
    tx_snr_db: list[float] = Field(
        default_factory=lambda: [5.0, 10.0, 15.0, 20.0, 25.0],
        description="Transmit SNR grid in dB",
    )
    seeds: list[int] = Field(
        default_factory=lambda: list(range(20)), description="Channel seeds"
    )
    eta_th: list[float] = Field(
        default_factory=lambda: [1e-2], description="SINR thresholds"
    )
    benchmark_eta_th: float = Field(
        default=0.2, description="SINR threshold of the benchmark table", ge=0.0
    )
    benchmark_tx_snr_db: float = Field(
        default=20.0, description="TX-SNR of the benchmark table"
    )
    pareto_points: int = Field(
        default=11, description="Number of weights on the Pareto grid", ge=1
    )

    @field_validator("alphas", "tx_snr_db", "seeds", "eta_th")
    @classmethod
    def validate_non_empty(cls, v: list[Any]) -> list[Any]:
        """Validate that every sweep grid has at least one entry."""
        if not v:
            raise ConfigurationError("Sweep grids must not be empty")
        return v

    @field_validator("alphas")
    @classmethod
    def validate_alphas(cls, v: list[float]) -> list[float]:
        """Validate that all weights are in [0, 1]."""
        if any(a < 0.0 or a > 1.0 for a in v):
            raise ConfigurationError("Weights must lie in [0, 1]", details={"alphas": v})
        return v

    @field_validator("eta_th")
    @classmethod
    def validate_eta(cls, v: list[float]) -> list[float]:
        """Validate that all SINR thresholds are non-negative."""
        if any(e < 0.0 for e in v):
            raise ConfigurationError(
                "SINR thresholds must be non-negative", details={"eta_th": v}
            )
        return v


class SolverBlock(BaseModel):
    """Numerical knobs forwarded to the SCA engine and the conic solver."""

    model_config = ConfigDict(extra="forbid")

    eps: float = Field(default=1e-3, description="SCA termination threshold", gt=0.0)
    max_outer_iters: int = Field(default=50, description="SCA iteration budget", ge=1)
    envelope_pieces: int = Field(default=64, description="Secant pieces", ge=1)
    solver_tol: float = Field(default=1e-7, description="Conic tolerance", gt=0.0, le=1e-2)
    sdp_tol: float = Field(default=1e-8, description="Benchmark tolerance", gt=0.0, le=1e-2)
    surrogate: Literal["conservative", "taylor"] = Field(
        default="conservative", description="Bilinear surrogate"
    )


class ExperimentConfig(BaseSettings):
    """
    Full experiment configuration.

    Only explicit keyword arguments are read by the constructor; files are
    merged in by `load_experiment_config`.
    """

    model_config = SettingsConfigDict(extra="forbid")

    system: SystemBlock = Field(default_factory=SystemBlock)
    sweep: SweepBlock = Field(default_factory=SweepBlock)
    solver: SolverBlock = Field(default_factory=SolverBlock)
    output_dir: Path = Field(default=Path("results"), description="CSV directory")

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings,)

    @model_validator(mode="after")
    def validate_eta_grid(self) -> "ExperimentConfig":
        """Validate cross-block consistency."""
        if self.sweep.benchmark_eta_th <= 0.0:
            raise ConfigurationError(
                "Benchmark SINR threshold must be positive",
                details={"benchmark_eta_th": self.sweep.benchmark_eta_th},
            )
        return self


def _deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        elif value is not None:
            merged[key] = value
    return merged


def load_experiment_config(
    path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> ExperimentConfig:
    """
    Load an experiment configuration.

    Args:
        path: Optional TOML file with ``[system]``, ``[sweep]`` and ``[solver]``
            sections
        overrides: Nested values taking precedence over the file (CLI flags)

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigurationError: If the file is missing or a value is invalid

    Example:
        >>> cfg = load_experiment_config("sweep.toml", {"sweep": {"seeds": [1, 2]}})
        >>> cfg.sweep.seeds
        [1, 2]
    """
    values: dict[str, Any] = {}

    if path is not None:
        file_path = Path(path)
        if not file_path.is_file():
            raise ConfigurationError(
                f"Experiment file not found: {file_path}",
                details={"path": str(file_path)},
            )
        try:
            values = TomlConfigSettingsSource(ExperimentConfig, toml_file=file_path)()
        except Exception as e:
            raise ConfigurationError(
                f"Failed to read experiment file: {e}",
                details={"path": str(file_path), "error": str(e)},
            )

    values = _deep_merge(values, overrides or {})

    if "output_dir" not in (overrides or {}) or (overrides or {}).get("output_dir") is None:
        env_dir = get_settings().output_dir
        if env_dir is not None:
            values["output_dir"] = env_dir

    try:
        return ExperimentConfig(**values)
    except PydanticValidationError as e:
        raise ConfigurationError(
            f"Invalid experiment configuration: {e}",
            details={"errors": e.errors(include_url=False)},
        )
