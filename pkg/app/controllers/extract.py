"""``extract pointcloud`` and ``extract params``: per-phantom model inputs."""

from __future__ import annotations

import argparse
from pathlib import Path

from app.services.cohort import CohortFiles
from app.services.experiment import experiment_hash
from app.services.extraction import extract_params, extract_pointclouds
from app.views.experiment import ExperimentConfig

from .dependencies import (
    PARAMS_DIR,
    PHANTOMS_DIR,
    POINTCLOUDS_DIR,
    get_store,
    input_path,
    override,
    resolve_config,
)


def _cohort(args: argparse.Namespace, config: ExperimentConfig) -> CohortFiles:
    return CohortFiles(
        input_path(
            args.cohort,
            Path(config.output_dir) / PHANTOMS_DIR,
            flag="--cohort",
            directory=True,
        )
    )


def pointcloud(args: argparse.Namespace) -> int:
    config = override(
        resolve_config(args), "pointcloud", n_points=args.points, seed=args.seed
    )
    store = get_store(config)
    extract_pointclouds(_cohort(args, config), config.pointcloud, store, POINTCLOUDS_DIR)
    store.write_manifest(
        POINTCLOUDS_DIR,
        command="extract pointcloud",
        config_hash=experiment_hash(config),
        seed=config.pointcloud.seed,
    )
    return 0


def params(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    store = get_store(config)
    files = _cohort(args, config)
    extract_params(files, store, PARAMS_DIR)
    store.write_manifest(
        PARAMS_DIR,
        command="extract params",
        config_hash=experiment_hash(config),
        seed=files.index.seed,
    )
    return 0


def register(commands: argparse._SubParsersAction) -> None:
    parser = commands.add_parser("extract", help="Model inputs from a cohort")
    actions = parser.add_subparsers(dest="action", required=True)

    cloud_parser = actions.add_parser(
        "pointcloud", help="Canonical point cloud per phantom"
    )
    cloud_parser.add_argument("--cohort", help="Cohort directory (default: <out>/phantoms)")
    cloud_parser.add_argument("--points", type=int, help="Points per cloud")
    cloud_parser.add_argument("--seed", type=int, help="Sampling seed")
    cloud_parser.set_defaults(handler=pointcloud, command="extract pointcloud")

    params_parser = actions.add_parser(
        "params", help="Structural-parameter vector per phantom"
    )
    params_parser.add_argument("--cohort", help="Cohort directory (default: <out>/phantoms)")
    params_parser.set_defaults(handler=params, command="extract params")
