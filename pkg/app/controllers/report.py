"""``report``: AUC table and mean-ROC CSV of a finished run."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from app.services.experiment import experiment_hash
from app.services.reporting import write_report

from .dependencies import EVAL_DIR, REPORT_DIR, get_store, input_path, resolve_config


def report(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    store = get_store(config)
    run_dir = input_path(
        args.run, Path(config.output_dir) / EVAL_DIR, flag="--run", directory=True
    )
    text = write_report(
        run_dir, store, REPORT_DIR, grid_points=config.evaluation.roc_grid_points
    )
    store.write_manifest(
        REPORT_DIR,
        command="report",
        config_hash=experiment_hash(config),
        seed=config.evaluation.seed,
    )
    sys.stdout.write(text)
    return 0


def register(commands: argparse._SubParsersAction) -> None:
    parser = commands.add_parser("report", help="Plain-text AUC table and ROC CSV")
    parser.add_argument("--run", help="Run directory (default: <out>/eval)")
    parser.set_defaults(handler=report, command="report")
