"""Prometheus metrics definitions and helpers."""

from __future__ import annotations

from pathlib import Path

from prometheus_client import REGISTRY, Counter, Histogram, generate_latest

COMMAND_COUNT = Counter(
    "onh_commands_total",
    "Total CLI commands processed",
    ("command", "status"),
)

COMMAND_LATENCY = Histogram(
    "onh_command_duration_seconds",
    "CLI command duration in seconds",
    ("command",),
    buckets=(
        0.1,
        0.5,
        1.0,
        5.0,
        15.0,
        60.0,
        300.0,
        900.0,
        1800.0,
        3600.0,
    ),
)

ERROR_COUNTER = Counter(
    "onh_command_errors_total",
    "Number of commands ending in a runtime failure",
    ("command",),
)

TRAINING_EPOCHS = Counter(
    "onh_training_epochs_total",
    "Training epochs completed",
    ("method",),
)

PHANTOMS_GENERATED = Counter(
    "onh_phantoms_generated_total",
    "Number of phantoms materialized and written",
)


def observe_command(command: str, exit_code: int, duration_seconds: float) -> None:
    """Record metrics for a finished command."""

    safe_command = command or "unknown"
    status_label = {0: "ok", 1: "invalid"}.get(exit_code, "failed")
    observed_duration = duration_seconds if duration_seconds >= 0 else 0

    COMMAND_COUNT.labels(command=safe_command, status=status_label).inc()
    COMMAND_LATENCY.labels(command=safe_command).observe(observed_duration)

    if exit_code >= 2:
        ERROR_COUNTER.labels(command=safe_command).inc()


def increment_epochs(method: str, count: int = 1) -> None:
    TRAINING_EPOCHS.labels(method=method).inc(count)


def increment_phantoms(count: int = 1) -> None:
    PHANTOMS_GENERATED.inc(count)


def write_metrics(path: str | Path) -> Path:
    """Dump the registry in the Prometheus text format."""

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(generate_latest(REGISTRY))
    return target
