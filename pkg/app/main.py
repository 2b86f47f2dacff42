"""Command-line entry point and parser factory."""

from __future__ import annotations

import argparse
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import NoReturn, Optional, Sequence

from pydantic import ValidationError

from .config.settings import settings
from .controllers import COMMAND_GROUPS
from .middleware import (
    CallNext,
    CommandRequest,
    StructuredLoggingMiddleware,
    TelemetryMiddleware,
)
from .pipelines.flow import ExperimentPipeline
from .telemetry import observe_command, write_metrics
from .views.common import ErrorResponse
from .views.experiment import ConfigError, describe_validation_error

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

EXIT_INVALID = 1
EXIT_FAILED = 2


def _configure_logging(level: Optional[str] = None) -> None:
    """Stream records to stderr and, when configured, to a rotating file."""

    logging.getLogger().handlers.clear()

    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(logging.Formatter(LOG_FORMAT))

    root_logger = logging.getLogger()
    root_logger.addHandler(stream_handler)
    if level is None:
        level = "DEBUG" if settings.debug else "INFO"
    root_logger.setLevel(level)

    if settings.log_file:
        log_path = Path(settings.log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(
            log_path,
            maxBytes=1_000_000,
            backupCount=5,
            encoding="utf-8",
        )
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root_logger.addHandler(file_handler)

    middleware_logger = logging.getLogger("app.middleware.structured")
    middleware_logger.handlers.clear()
    middleware_stream = logging.StreamHandler(sys.stderr)
    middleware_stream.setFormatter(logging.Formatter("%(message)s"))
    middleware_logger.addHandler(middleware_stream)
    middleware_logger.setLevel(logging.INFO)
    middleware_logger.propagate = False


class CommandParser(argparse.ArgumentParser):
    """Argument parser that raises instead of exiting on bad input."""

    def error(self, message: str) -> NoReturn:
        raise ConfigError(message)


def create_parser() -> CommandParser:
    """Create the ``onh-lab`` parser with every command group registered."""

    parser = CommandParser(
        prog="onh-lab",
        description=f"{settings.app_name} {settings.app_version}",
        epilog="experiment stages:\n" + ExperimentPipeline.render(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", help="Experiment config JSON")
    parser.add_argument("--out", help="Output directory (overrides output_dir)")
    parser.add_argument(
        "--jobs",
        type=int,
        default=settings.jobs,
        help="Worker processes for cohort generation and folds",
    )
    parser.add_argument("--metrics-file", help="Write Prometheus metrics here afterwards")
    parser.add_argument("--log-level", choices=LOG_LEVELS, help="Root log level")

    commands = parser.add_subparsers(
        dest="group", required=True, parser_class=CommandParser
    )
    for group in COMMAND_GROUPS:
        group.register(commands)
    return parser


def _report_error(detail: str, code: str) -> None:
    sys.stderr.write(ErrorResponse(detail=detail, code=code).model_dump_json() + "\n")


def handle_command(request: CommandRequest) -> int:
    """Run the handler; exceptions become exit codes and an error payload."""

    try:
        return request.args.handler(request.args)
    except ConfigError as exc:
        _report_error(str(exc), "invalid_config")
        return EXIT_INVALID
    except ValidationError as exc:
        _report_error(describe_validation_error(exc), "invalid_config")
        return EXIT_INVALID
    except RuntimeError as exc:
        logger.error("%s failed: %s", request.command, exc)
        _report_error(str(exc), type(exc).__name__)
        return EXIT_FAILED
    except Exception:
        logger.exception("%s failed", request.command)
        _report_error("Internal error", "internal_error")
        return EXIT_FAILED


def build_pipeline(handler: CallNext = handle_command) -> CallNext:
    app: CallNext = TelemetryMiddleware(handler)
    return StructuredLoggingMiddleware(app)


def run_command(argv: Sequence[str]) -> int:
    """Parse ``argv``, run the command and return its exit code."""

    parser = create_parser()
    try:
        args = parser.parse_args(list(argv))
    except ConfigError as exc:
        _report_error(str(exc), "invalid_arguments")
        observe_command("cli", EXIT_INVALID, 0.0)
        return EXIT_INVALID

    if args.jobs < 1:
        _report_error(
            f"--jobs: expected a positive integer, got {args.jobs}", "invalid_arguments"
        )
        return EXIT_INVALID

    _configure_logging(args.log_level)
    exit_code = build_pipeline()(CommandRequest(args.command, args))
    if args.metrics_file:
        write_metrics(args.metrics_file)
    return exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
