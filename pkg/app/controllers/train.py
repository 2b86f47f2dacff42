"""``train dgcnn|rf|ae``: fit one method on a single stratified split."""

from __future__ import annotations

import argparse
from pathlib import Path

from app.services.cohort import CohortFiles
from app.services.extraction import FEATURES_FILE, LABELS_FILE
from app.services.training import train_ae_split, train_dgcnn_split, train_rf_split
from app.views.experiment import ExperimentConfig

from .dependencies import (
    LABELS_DIR,
    MODELS_DIR,
    PARAMS_DIR,
    PHANTOMS_DIR,
    POINTCLOUDS_DIR,
    get_store,
    input_path,
    resolve_config,
)


def _labels(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    default = Path(config.output_dir) / LABELS_DIR / LABELS_FILE
    return input_path(args.labels, default, flag="--labels")


def dgcnn(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    clouds = input_path(
        args.clouds,
        Path(config.output_dir) / POINTCLOUDS_DIR,
        flag="--clouds",
        directory=True,
    )
    train_dgcnn_split(
        clouds, _labels(args, config), config, get_store(config), f"{MODELS_DIR}/dgcnn"
    )
    return 0


def rf(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    features = input_path(
        args.features,
        Path(config.output_dir) / PARAMS_DIR / FEATURES_FILE,
        flag="--features",
    )
    train_rf_split(
        features, _labels(args, config), config, get_store(config), f"{MODELS_DIR}/rf"
    )
    return 0


def ae(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    cohort = input_path(
        args.cohort,
        Path(config.output_dir) / PHANTOMS_DIR,
        flag="--cohort",
        directory=True,
    )
    train_ae_split(
        CohortFiles(cohort),
        _labels(args, config),
        config,
        get_store(config),
        f"{MODELS_DIR}/ae",
    )
    return 0


def register(commands: argparse._SubParsersAction) -> None:
    parser = commands.add_parser("train", help="Train one method on a 70/15/15 split")
    methods = parser.add_subparsers(dest="method", required=True)

    dgcnn_parser = methods.add_parser("dgcnn", help="Dynamic graph CNN on point clouds")
    dgcnn_parser.add_argument("--clouds", help="Point-cloud directory")
    dgcnn_parser.add_argument("--labels", help="labels.jsonl")
    dgcnn_parser.set_defaults(handler=dgcnn, command="train dgcnn")

    rf_parser = methods.add_parser("rf", help="Random forest on structural parameters")
    rf_parser.add_argument("--features", help="features.csv")
    rf_parser.add_argument("--labels", help="labels.jsonl")
    rf_parser.set_defaults(handler=rf, command="train rf")

    ae_parser = methods.add_parser("ae", help="Autoencoder on central B-scans")
    ae_parser.add_argument("--cohort", help="Cohort directory")
    ae_parser.add_argument("--labels", help="labels.jsonl")
    ae_parser.set_defaults(handler=ae, command="train ae")
