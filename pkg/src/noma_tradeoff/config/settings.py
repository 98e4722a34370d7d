"""
Configuration settings for noma-tradeoff.

Solver and runtime defaults are managed with Pydantic settings. Values can be
overridden through environment variables prefixed with ``NOMA_`` or a ``.env``
file at the project root.
"""

from pathlib import Path
from typing import Literal

from pydantic import Field, field_validator
from pydantic import ValidationError as PydanticValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..exceptions import ConfigurationError


def _find_project_root() -> Path:
    """
    Find the project root directory by looking for pyproject.toml.

    Searches upward from this file's location until it finds pyproject.toml.
    Falls back to current working directory if not found.

    Returns:
        Path to the project root directory
    """
    current = Path(__file__).resolve().parent

    for _ in range(10):
        if (current / "pyproject.toml").exists():
            return current
        if current.parent == current:
            break
        current = current.parent

    return Path.cwd()


class NomaSettings(BaseSettings):
    """
    Solver and runtime settings with automatic environment variable loading.

    Attributes:
        solver_tol: Relative residual/gap tolerance of the conic solver
        solver_max_iter: Iteration budget of one conic solve
        static_regularization: Diagonal regularization of the reduced KKT system
        sdp_tol: Tolerance used by the semidefinite benchmark
        sca_eps: Termination threshold on successive SCA objective change
        max_outer_iters: Iteration budget of one SCA run
        taylor_guard: Minimum allowed z - 1 and r - 1 at a linearization point
        envelope_pieces: Number of secant pieces per exponential constraint
        surrogate: Convex surrogate used for bilinear terms
        sic_margin: Relative margin kept on linearized SIC ordering rows
        dinkelbach_tol: Stopping threshold on the Dinkelbach parametric value
        dinkelbach_max_iter: Dinkelbach iteration budget
        jobs: Default worker count of the experiment pool
        log_level: Logging level used by the CLI
        output_dir: Directory receiving experiment CSV files
    """

    model_config = SettingsConfigDict(
        env_file=str(_find_project_root() / ".env"),
        env_file_encoding="utf-8",
        env_prefix="NOMA_",
        case_sensitive=False,
        extra="ignore",
    )

    solver_tol: float = Field(
        default=1e-7,
        description="Relative residual and gap tolerance of the conic solver",
        gt=0.0,
        le=1e-2,
    )

    solver_max_iter: int = Field(
        default=100,
        description="Iteration budget of a single conic solve",
        ge=1,
        le=1000,
    )

    static_regularization: float = Field(
        default=1e-9,
        description="Static regularization added to the reduced KKT system",
        gt=0.0,
        le=1e-3,
    )

    sdp_tol: float = Field(
        default=1e-8,
        description="Tolerance of the semidefinite relaxation benchmark",
        gt=0.0,
        le=1e-2,
    )

    sca_eps: float = Field(
        default=1e-3,
        description="Termination threshold on successive SCA objective change",
        gt=0.0,
        le=1.0,
    )

    max_outer_iters: int = Field(
        default=50,
        description="Iteration budget of one SCA run",
        ge=1,
        le=1000,
    )

    taylor_guard: float = Field(
        default=1e-6,
        description="Minimum allowed z - 1 and r - 1 at a linearization point",
        gt=0.0,
        le=1e-1,
    )

    envelope_pieces: int = Field(
        default=64,
        description="Secant pieces per exponential constraint",
        ge=1,
        le=4096,
    )

    surrogate: Literal["conservative", "taylor"] = Field(
        default="conservative",
        description="Convex surrogate used for the bilinear SCA terms",
    )

    sic_margin: float = Field(
        default=1e-6,
        description="Relative margin kept on linearized SIC ordering rows",
        ge=0.0,
        le=1e-2,
    )

    dinkelbach_tol: float = Field(
        default=1e-6,
        description="Stopping threshold on the Dinkelbach parametric value",
        gt=0.0,
    )

    dinkelbach_max_iter: int = Field(
        default=50,
        description="Dinkelbach iteration budget",
        ge=1,
    )

    jobs: int = Field(
        default=1,
        description="Default worker count of the experiment pool",
        ge=1,
        le=256,
    )

    log_level: str = Field(
        default="INFO",
        description="Logging level used by the command line interface",
    )

    output_dir: Path | None = Field(
        default=None,
        description="Directory receiving experiment CSV files",
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate the logging level name."""
        level = v.strip().upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ConfigurationError(
                f"Unknown log level: {v}",
                details={"log_level": v},
            )
        return level

    @field_validator("output_dir", mode="before")
    @classmethod
    def validate_output_dir(cls, v: str | Path | None) -> Path | None:
        """Validate that the output directory is not an existing file."""
        if v is None or v == "":
            return None

        path = Path(v) if isinstance(v, str) else v

        if path.exists() and not path.is_dir():
            raise ConfigurationError(
                f"Output path is not a directory: {path}",
                details={"path": str(path)},
            )

        return path


_settings: NomaSettings | None = None


def _load() -> NomaSettings:
    try:
        return NomaSettings()
    except PydanticValidationError as e:
        raise ConfigurationError(
            f"Invalid NOMA_ settings: {e}",
            details={"errors": e.errors(include_url=False)},
        )


def get_settings() -> NomaSettings:
    """
    Get the global settings instance.

    Settings are loaded once and cached for subsequent calls.

    Returns:
        NomaSettings instance

    Raises:
        ConfigurationError: If an environment value is invalid
    """
    global _settings
    if _settings is None:
        _settings = _load()
    return _settings


def reload_settings() -> NomaSettings:
    """
    Reload settings from the environment and .env file.

    Returns:
        Fresh NomaSettings instance

    Raises:
        ConfigurationError: If an environment value is invalid
    """
    global _settings
    _settings = _load()
    return _settings
