"""Experiment configuration files and per-environment runtime settings."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Literal

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from kiro_leno import PROJECT_DIR
from kiro_leno.operator_learning.entities.coeff_net import AdamSettings
from kiro_leno.operator_learning.entities.problem import ProblemSpec
from kiro_leno.operator_learning.entities.training import LossMode, TrainConfig
from kiro_leno.operator_learning.entities.transfer import TransferConfig
from kiro_leno.operator_learning.errors import ValidationError
from kiro_leno.operator_learning.pde_lab.catalog import builtin_problem

ENVIRONMENTS = ("local", "dev", "acc", "prd")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProblemSection(_Section):
    """Catalog problem and its overrides (domain, resolution, bc, diffusion, params, defaults)."""

    name: str = Field(default="kpp", description="Catalog problem name")
    overrides: dict[str, Any] = Field(default_factory=dict, description="Keys accepted by builtin_problem")


class DataSection(_Section):
    samples: int | None = Field(default=None, ge=1, description="Number of trajectories M")
    seed: int | None = Field(default=None, description="Seed for initial conditions")
    record_dt: float | None = Field(default=None, gt=0, description="Recording step tau")
    force_dt: bool = Field(default=False, description="Use record_dt as the solver step even if unstable")


class BasisSection(_Section):
    modes: int | None = Field(default=None, ge=1, description="Number of eigenfunctions P")


class ModelSection(_Section):
    hidden: list[int] | None = Field(default=None, description="Hidden layer widths")
    seed: int = Field(default=0, description="Initialization seed")
    lift_in_input: bool = Field(default=False, description="Feed lift coefficients to the network (reserved)")

    @field_validator("hidden")
    @classmethod
    def validate_hidden(cls, v):
        if v is not None and any(width < 1 for width in v):
            raise ValueError(f"hidden widths must be positive, got {v}")
        return v

    @field_validator("lift_in_input")
    @classmethod
    def validate_lift_in_input(cls, v):
        if v:
            raise ValueError("lift coefficients are excluded from the network input; lift_in_input is reserved")
        return v


class TrainingSection(_Section):
    epochs: int | None = Field(default=None, ge=1)
    lr: float = Field(default=1e-3, gt=0)
    decay_factor: float = Field(default=0.25, gt=0, le=1)
    decay_every: int = Field(default=1000, ge=1)
    loss_mode: LossMode = LossMode.COMBINED
    eps_floor: float = Field(default=1e-12, gt=0)
    seed: int | None = None
    log_every: int = Field(default=100, ge=1)
    checkpoint_every: int | None = Field(default=None, ge=1)


class HorizonsSection(_Section):
    train: int | None = Field(default=None, ge=1, description="Rollout steps used in training")
    eval: int | None = Field(default=None, ge=1, description="Recorded steps, also the evaluation horizon")


class PathsSection(_Section):
    out: Path = Field(default=Path("runs"), description="Directory for every artifact without an explicit path")
    basis: Path | None = None
    trajectories: Path | None = None
    dataset: Path | None = None
    model: Path | None = None
    reports: Path | None = None

    def resolve(self, name: str) -> Path:
        explicit = getattr(self, name)
        if explicit is not None:
            return Path(explicit)
        defaults = {
            "basis": "basis.leno",
            "trajectories": "trajectories.leno",
            "dataset": "dataset.leno",
            "model": "model.leno",
            "reports": "reports",
        }
        return self.out / defaults[name]


class AcceptanceSection(_Section):
    thresholds: dict[str, float] = Field(default_factory=dict, description="Metric name -> upper bound")

    @field_validator("thresholds")
    @classmethod
    def validate_thresholds(cls, v):
        unknown = set(v) - {"E_L2", "E_Res", "E_Nonlinear"}
        if unknown:
            raise ValueError(f"unknown metrics {sorted(unknown)}")
        return v


class ExperimentConfig(_Section):
    """Everything one pipeline run needs; unset values fall back to the problem's defaults."""

    problem: ProblemSection = Field(default_factory=ProblemSection)
    data: DataSection = Field(default_factory=DataSection)
    basis: BasisSection = Field(default_factory=BasisSection)
    model: ModelSection = Field(default_factory=ModelSection)
    training: TrainingSection = Field(default_factory=TrainingSection)
    horizons: HorizonsSection = Field(default_factory=HorizonsSection)
    transfer: TransferConfig = Field(default_factory=TransferConfig)
    paths: PathsSection = Field(default_factory=PathsSection)
    acceptance: AcceptanceSection = Field(default_factory=AcceptanceSection)

    @classmethod
    def from_file(cls, path: Path | str) -> ExperimentConfig:
        """Read a UTF-8 JSON (or YAML) config."""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
        if not isinstance(raw, dict):
            raise ValidationError(f"config {path} must hold a mapping")
        return cls.model_validate(raw)

    def to_file(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    def with_overrides(self, assignments: list[str]) -> ExperimentConfig:
        """Apply "section.key=value" assignments; values are parsed as YAML scalars/lists."""
        data = self.model_dump(mode="json")
        for assignment in assignments:
            key, sep, raw = assignment.partition("=")
            if not sep or not key:
                raise ValidationError(f"override {assignment!r} is not of the form section.key=value")
            parts = key.strip().split(".")
            target = data
            for part in parts[:-1]:
                if not isinstance(target.get(part), dict):
                    target[part] = {}
                target = target[part]
            target[parts[-1]] = yaml.safe_load(raw)
        return type(self).model_validate(data)

    def problem_spec(self) -> ProblemSpec:
        overrides = dict(self.problem.overrides)
        for key, value in (
            ("record_dt", self.data.record_dt),
            ("samples", self.data.samples),
            ("modes", self.basis.modes),
            ("hidden", self.model.hidden),
            ("epochs", self.training.epochs),
            ("train_horizon", self.horizons.train),
            ("eval_horizon", self.horizons.eval),
        ):
            if value is not None:
                overrides[key] = value
        return builtin_problem(self.problem.name, overrides)

    def train_config(self, problem: ProblemSpec, seed: int | None = None, checkpoint_dir: Path | None = None) -> TrainConfig:
        defaults = problem.defaults
        seed = seed if seed is not None else self.training.seed
        if seed is None:
            raise ValidationError("a training seed is required (--seed or training.seed)")
        return TrainConfig(
            epochs=self.training.epochs or (defaults.epochs if defaults else 5000),
            loss_mode=self.training.loss_mode,
            eps_floor=self.training.eps_floor,
            seed=seed,
            optimizer=AdamSettings(
                lr=self.training.lr, decay_factor=self.training.decay_factor, decay_every=self.training.decay_every
            ),
            horizon=self.horizons.train or (defaults.train_horizon if defaults else None),
            log_every=self.training.log_every,
            checkpoint_every=self.training.checkpoint_every,
            checkpoint_dir=checkpoint_dir,
        )


class RuntimeSettings(BaseSettings):
    """Process-wide knobs: worker cap, output root and logging."""

    model_config = SettingsConfigDict(env_prefix="LENO_", extra="ignore")

    environment: Literal["local", "dev", "acc", "prd"] = "local"
    threads: int = Field(default=1, ge=1)
    out_dir: Path = Path("runs")
    log_level: str = "INFO"
    log_json: bool = False

    @classmethod
    def from_yaml_and_env(
        cls, config_path: Path | str | None = None, env: str = "local", env_dir: str = "config"
    ) -> RuntimeSettings:
        """Per-environment YAML values, overridden by LENO_* environment variables."""
        if env not in ENVIRONMENTS:
            raise ValueError(f"Invalid environment: {env}")

        env_file = Path(env_dir) / f".env.{env}"
        if env_file.exists():
            load_dotenv(env_file, override=True)
        else:
            load_dotenv(override=False)

        config_path = Path(config_path or PROJECT_DIR / "project_config_leno.yml")
        yaml_config: dict[str, Any] = {}
        if config_path.exists():
            with open(config_path, encoding="utf-8") as f:
                yaml_config = (yaml.safe_load(f) or {}).get(env, {}) or {}

        from_env = cls()
        merged = {**yaml_config, **from_env.model_dump(include=from_env.model_fields_set)}
        merged["environment"] = env
        return cls(**merged)


# Singleton pattern for config
_config: RuntimeSettings | None = None


def get_config(env: str | None = None) -> RuntimeSettings:
    """Get or create the settings singleton."""
    global _config
    if _config is None:
        env = env or os.getenv("LENO_ENVIRONMENT", "local")
        _config = RuntimeSettings.from_yaml_and_env(env=env)
    return _config


def reset_config() -> None:
    """Reset the settings singleton (useful for testing)."""
    global _config
    _config = None
