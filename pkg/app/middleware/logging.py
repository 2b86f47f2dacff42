"""Structured logging middleware for CLI commands."""

from __future__ import annotations

import logging
import time
from datetime import datetime, timezone
from typing import Any

from .base import CallNext, CommandMiddleware, CommandRequest

logger = logging.getLogger("app.middleware.structured")

COLOR_RESET = "\u001b[0m"
COLOR_GREEN = "\u001b[32m"
COLOR_CYAN = "\u001b[36m"
COLOR_YELLOW = "\u001b[33m"
COLOR_RED = "\u001b[31m"

STATUS_NAMES = {0: "ok", 1: "invalid"}


class StructuredLoggingMiddleware(CommandMiddleware):
    """Emit one coloured summary line per command."""

    def dispatch(self, request: CommandRequest, call_next: CallNext) -> int:
        start_time = time.perf_counter()
        log_payload: dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "command": request.command,
            "output_dir": getattr(request.args, "out", None),
        }

        try:
            exit_code = call_next(request)
        except Exception as exc:  # pragma: no cover - handlers map their own errors
            log_payload["exit_code"] = 2
            log_payload["duration_ms"] = self._elapsed_ms(start_time)
            log_payload["error"] = repr(exc)
            logger.exception(self._format_console_message(log_payload))
            raise

        log_payload["exit_code"] = exit_code
        log_payload["duration_ms"] = self._elapsed_ms(start_time)
        logger.info(self._format_console_message(log_payload))
        return exit_code

    @staticmethod
    def _elapsed_ms(start_time: float) -> float:
        """Return elapsed milliseconds rounded to two decimals."""

        return round((time.perf_counter() - start_time) * 1000, 2)

    @staticmethod
    def _format_console_message(payload: dict[str, Any]) -> str:
        """Return command metadata wrapped with ANSI color codes."""

        exit_code = payload.get("exit_code")
        if exit_code == 0:
            color = COLOR_GREEN
        elif exit_code == 1:
            color = COLOR_YELLOW
        elif exit_code is not None:
            color = COLOR_RED
        else:
            color = COLOR_CYAN

        fields = [
            ("timestamp", payload.get("timestamp")),
            ("command", payload.get("command")),
            ("status", STATUS_NAMES.get(exit_code, "failed")),
            ("duration_ms", payload.get("duration_ms")),
            ("output_dir", payload.get("output_dir")),
        ]
        message = ", ".join(
            f"{name}={value if value is not None else '-'}" for name, value in fields
        )

        return f"{color}{message}{COLOR_RESET}"
