"""``critical-points``: pooled critical-point density of a trained DGCNN."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from app.services.experiment import experiment_hash
from app.services.storage import dump_json
from app.services.training import critical_points

from .dependencies import (
    CRITICAL_DIR,
    MODELS_DIR,
    POINTCLOUDS_DIR,
    get_store,
    input_path,
    resolve_config,
)


def critical(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    store = get_store(config)
    model = (
        Path(args.model)
        if args.model
        else Path(config.output_dir) / MODELS_DIR / "dgcnn" / "model"
    )
    # weights live next to their manifest as <stem>.bin + <stem>.json
    input_path(None, model.with_suffix(".json"), flag="--model")
    clouds = input_path(
        args.clouds,
        Path(config.output_dir) / POINTCLOUDS_DIR,
        flag="--clouds",
        directory=True,
    )
    report = critical_points(
        model, clouds, config.evaluation, store, ids=args.ids, relative=CRITICAL_DIR
    )
    store.write_manifest(
        CRITICAL_DIR,
        command="critical-points",
        config_hash=experiment_hash(config),
        seed=config.dgcnn.seed,
    )
    sys.stdout.write(dump_json(report))
    return 0


def register(commands: argparse._SubParsersAction) -> None:
    parser = commands.add_parser(
        "critical-points", help="Critical-point density map of a saved DGCNN"
    )
    parser.add_argument("--model", help="Weight file stem (default: <out>/models/dgcnn/model)")
    parser.add_argument("--clouds", help="Point-cloud directory")
    parser.add_argument("--ids", nargs="+", help="Restrict to these phantom ids")
    parser.set_defaults(handler=critical, command="critical-points")
