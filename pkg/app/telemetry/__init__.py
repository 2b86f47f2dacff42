"""Telemetry helpers and metrics."""

from .metrics import (
    COMMAND_COUNT,
    COMMAND_LATENCY,
    ERROR_COUNTER,
    PHANTOMS_GENERATED,
    TRAINING_EPOCHS,
    increment_epochs,
    increment_phantoms,
    observe_command,
    write_metrics,
)

__all__ = [
    "COMMAND_COUNT",
    "COMMAND_LATENCY",
    "ERROR_COUNTER",
    "PHANTOMS_GENERATED",
    "TRAINING_EPOCHS",
    "increment_epochs",
    "increment_phantoms",
    "observe_command",
    "write_metrics",
]
