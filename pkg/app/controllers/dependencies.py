"""Shared helpers reused across command controllers."""

from __future__ import annotations

import argparse
from pathlib import Path
from typing import Any, Optional

from app.services.storage import ArtifactStore
from app.views.experiment import (
    ConfigError,
    ExperimentConfig,
    load_experiment_config,
    parse_experiment_config,
)

PHANTOMS_DIR = "phantoms"
LABELS_DIR = "labels"
POINTCLOUDS_DIR = "pointclouds"
PARAMS_DIR = "params"
MODELS_DIR = "models"
EVAL_DIR = "eval"
CRITICAL_DIR = "critical"
REPORT_DIR = "report"


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Experiment config from ``--config`` (or defaults), ``--out`` applied."""

    config_path: Optional[str] = getattr(args, "config", None)
    config = load_experiment_config(config_path) if config_path else ExperimentConfig()
    out: Optional[str] = getattr(args, "out", None)
    if out:
        config = config.model_copy(update={"output_dir": out})
    return config


def override(config: ExperimentConfig, section: str, **values: Any) -> ExperimentConfig:
    """Copy of ``config`` with some fields of one section replaced and re-validated."""

    updates = {name: value for name, value in values.items() if value is not None}
    if not updates:
        return config
    payload = config.model_dump(mode="json")
    payload[section].update(updates)
    return parse_experiment_config(payload)


def get_store(config: ExperimentConfig) -> ArtifactStore:
    return ArtifactStore(config.output_dir)


def input_path(
    value: Optional[str],
    default: Path,
    *,
    flag: str,
    directory: bool = False,
) -> Path:
    """Existing input named on the command line, or its default location."""

    path = Path(value) if value else default
    exists = path.is_dir() if directory else path.is_file()
    if not exists:
        kind = "directory" if directory else "file"
        raise ConfigError(f"{flag}: {kind} {path} does not exist")
    return path


__all__ = [
    "CRITICAL_DIR",
    "EVAL_DIR",
    "LABELS_DIR",
    "MODELS_DIR",
    "PARAMS_DIR",
    "PHANTOMS_DIR",
    "POINTCLOUDS_DIR",
    "REPORT_DIR",
    "get_store",
    "input_path",
    "override",
    "resolve_config",
]
