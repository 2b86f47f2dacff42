"""``label strain``: robust / fragile labels from each phantom's strain field."""

from __future__ import annotations

import argparse
from pathlib import Path

from app.services.cohort import CohortFiles
from app.services.experiment import experiment_hash
from app.services.extraction import label_cohort

from .dependencies import (
    LABELS_DIR,
    PHANTOMS_DIR,
    get_store,
    input_path,
    resolve_config,
)


def strain(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    store = get_store(config)
    cohort_dir = input_path(
        args.cohort, Path(config.output_dir) / PHANTOMS_DIR, flag="--cohort", directory=True
    )
    files = CohortFiles(cohort_dir)
    label_cohort(files, config.strain, store, LABELS_DIR)
    store.write_manifest(
        LABELS_DIR,
        command="label strain",
        config_hash=experiment_hash(config),
        seed=files.index.seed,
    )
    return 0


def register(commands: argparse._SubParsersAction) -> None:
    parser = commands.add_parser("label", help="Strain labelling")
    actions = parser.add_subparsers(dest="action", required=True)

    strain_parser = actions.add_parser(
        "strain", help="Label every phantom of a cohort from its lamina strain"
    )
    strain_parser.add_argument("--cohort", help="Cohort directory (default: <out>/phantoms)")
    strain_parser.set_defaults(handler=strain, command="label strain")
