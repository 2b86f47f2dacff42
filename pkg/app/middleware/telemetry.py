"""Telemetry middleware for command instrumentation."""

from __future__ import annotations

import time

from app.telemetry import observe_command

from .base import CallNext, CommandMiddleware, CommandRequest


class TelemetryMiddleware(CommandMiddleware):
    """Collect command metrics for Prometheus."""

    def dispatch(self, request: CommandRequest, call_next: CallNext) -> int:
        start_time = time.perf_counter()

        try:
            exit_code = call_next(request)
        except Exception:  # pragma: no cover - handlers map their own errors
            observe_command(request.command, 2, time.perf_counter() - start_time)
            raise

        observe_command(request.command, exit_code, time.perf_counter() - start_time)
        return exit_code
