"""Experiment configuration schema shared by every CLI command."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.config.settings import (
    AugmentationSettings,
    AutoencoderConfig,
    DgcnnConfig,
    EvaluationConfig,
    ForestConfig,
    PhantomConfig,
    PointCloudConfig,
    StrainConfig,
    settings,
)


class ConfigError(RuntimeError):
    """Raised when command-line arguments or a config file are invalid."""


class ExperimentConfig(BaseModel):
    """Everything a reproducible run depends on.

    Defaults come from the environment-aware global ``settings`` so a JSON
    config only needs the fields it changes.
    """

    model_config = ConfigDict(extra="forbid")

    output_dir: str = Field(default_factory=lambda: settings.output_dir)
    phantom: PhantomConfig = Field(default_factory=lambda: settings.phantom)
    strain: StrainConfig = Field(default_factory=lambda: settings.strain)
    pointcloud: PointCloudConfig = Field(default_factory=lambda: settings.pointcloud)
    augmentation: AugmentationSettings = Field(
        default_factory=lambda: settings.augmentation
    )
    dgcnn: DgcnnConfig = Field(default_factory=lambda: settings.dgcnn)
    forest: ForestConfig = Field(default_factory=lambda: settings.forest)
    autoencoder: AutoencoderConfig = Field(default_factory=lambda: settings.autoencoder)
    evaluation: EvaluationConfig = Field(default_factory=lambda: settings.evaluation)


def describe_validation_error(exc: ValidationError) -> str:
    """Flatten a pydantic error into ``field.path: message`` fragments."""

    parts = []
    for error in exc.errors():
        location = ".".join(str(item) for item in error.get("loc", ())) or "config"
        parts.append(f"{location}: {error.get('msg', 'invalid value')}")
    return "; ".join(parts)


def parse_experiment_config(payload: Any) -> ExperimentConfig:
    """Validate a decoded JSON document, raising :class:`ConfigError`."""

    if not isinstance(payload, dict):
        raise ConfigError("config: expected a JSON object at the top level")
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as exc:
        raise ConfigError(describe_validation_error(exc)) from exc


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Read and validate an experiment config file."""

    config_path = Path(path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {config_path}: {exc.strerror}") from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config: {config_path} is not valid JSON (line {exc.lineno}): {exc.msg}"
        ) from exc
    return parse_experiment_config(payload)


def experiment_schema() -> dict[str, Any]:
    """Published JSON schema; clinical-study defaults carry a ``source`` tag."""

    return ExperimentConfig.model_json_schema()


__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "describe_validation_error",
    "experiment_schema",
    "load_experiment_config",
    "parse_experiment_config",
]
