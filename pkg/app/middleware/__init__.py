"""Command middleware package."""

from .base import CallNext, CommandMiddleware, CommandRequest
from .logging import StructuredLoggingMiddleware
from .telemetry import TelemetryMiddleware

__all__ = [
    "CallNext",
    "CommandMiddleware",
    "CommandRequest",
    "StructuredLoggingMiddleware",
    "TelemetryMiddleware",
]
