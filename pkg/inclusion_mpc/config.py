"""Configuration loading and validation."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from inclusion_mpc.errors import ConfigError

TierName = Literal["lipschitz", "known_terms", "constraints"]
NormName = Literal["inf", "one"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TrustRegionConfig(_Section):
    """Trust-region overrides; unset values derive from the control box."""

    initial_radius: float | None = Field(default=None, gt=0)
    min_radius: float | None = Field(default=None, gt=0)
    max_radius: float | None = Field(default=None, gt=0)
    rho_accept: float = Field(default=0.1, gt=0, lt=1)
    rho_good: float = Field(default=0.7, gt=0, lt=1)
    shrink: float = Field(default=0.5, gt=0, lt=1)
    grow: float = Field(default=2.0, gt=1)
    penalty: float = Field(default=1e3, gt=0)
    max_iters: int = Field(default=30, ge=1)
    trust_norm: NormName = "inf"
    penalty_norm: NormName = "one"


class CostConfig(_Section):
    """Quadratic task cost; unset values take the environment defaults."""

    state_weights: list[float] | None = None
    control_weight: float | None = Field(default=None, ge=0)
    target: list[float] | None = None

    @field_validator("state_weights")
    @classmethod
    def _nonnegative(cls, value: list[float] | None) -> list[float] | None:
        if value is not None and any(w < 0 for w in value):
            raise ValueError("state weights must be nonnegative")
        return value


class LipschitzConfig(_Section):
    """Where the Lipschitz bounds come from."""

    source: Literal["declared", "estimated"] = "declared"
    n_samples: int = Field(default=1000, ge=2)
    safety: float = Field(default=1.0, ge=1)


class InclusionConfig(_Section):
    """Data refinement and derivative sampling."""

    max_sweeps: int = Field(default=20, ge=1)
    sweep_tol: float = Field(default=1e-6, gt=0)
    strict_sweeps: bool = False
    drop_inconsistent: bool = False
    max_records: int | None = Field(default=None, ge=1)
    derivatives: Literal["exact", "central_difference"] = "exact"
    fd_padding: float = Field(default=0.05, ge=0)  # absolute, per component
    jacobian_weight: Literal["column", "row"] = "column"


class RunConfig(_Section):
    """One episode (or ablation) run."""

    environment: str
    side_info: TierName = "constraints"
    horizon: int = Field(default=2, ge=0)
    dt: float | None = Field(default=None, gt=0)  # environment default when unset
    steps: int = Field(default=200, ge=0)
    seed: int = 0
    theta: float | list[float] = 0.5
    excitation_probability: float = Field(default=0.0, ge=0, le=1)
    initial_state: list[float] | None = None
    trust_region: TrustRegionConfig = Field(default_factory=TrustRegionConfig)
    cost: CostConfig = Field(default_factory=CostConfig)
    lipschitz: LipschitzConfig = Field(default_factory=LipschitzConfig)
    inclusion: InclusionConfig = Field(default_factory=InclusionConfig)
    ablation_tiers: list[TierName] = Field(
        default_factory=lambda: ["lipschitz", "known_terms", "constraints"], min_length=1
    )
    output_dir: str | None = None

    @field_validator("theta")
    @classmethod
    def _unit_theta(cls, value: float | list[float]) -> float | list[float]:
        values = value if isinstance(value, list) else [value]
        if not values or any(not 0.0 <= t <= 1.0 for t in values):
            raise ValueError("theta must lie in [0, 1]")
        return value

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunConfig:
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc

    @classmethod
    def from_yaml(cls, path: str | Path) -> RunConfig:
        """Load configuration from YAML file."""
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"configuration file not found: {path}")
        try:
            with open(path) as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must hold a mapping at the top level")
        return cls.from_dict(data)

    def with_overrides(self, **changes: Any) -> RunConfig:
        """Copy with top-level values replaced (None leaves a value unchanged)."""
        data = self.model_dump()
        data.update({k: v for k, v in changes.items() if v is not None})
        return RunConfig.from_dict(data)


class Settings(BaseSettings):
    """Process-level overrides from IMC_* environment variables."""

    model_config = SettingsConfigDict(env_prefix="IMC_")

    output_dir: str = "out"
    log_level: str = "INFO"


def load_config(path: str | Path | None = None) -> RunConfig:
    """Load configuration from file or the usual locations."""
    if path:
        return RunConfig.from_yaml(path)

    for candidate in [Path("config.yaml"), Path("config/config.yaml")]:
        if candidate.exists():
            return RunConfig.from_yaml(candidate)

    raise ConfigError("no configuration file given and none found in the usual locations")


def resolve_output_dir(config: RunConfig, override: str | Path | None = None) -> Path:
    """--out beats the config file, which beats IMC_OUTPUT_DIR."""
    if override:
        return Path(override)
    if config.output_dir:
        return Path(config.output_dir)
    return Path(Settings().output_dir)
