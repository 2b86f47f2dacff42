"""``phantom generate``: write a synthetic cohort to disk."""

from __future__ import annotations

import argparse
import logging

from app.services.cohort import build_cohort, write_cohort
from app.services.experiment import experiment_hash

from .dependencies import PHANTOMS_DIR, get_store, override, resolve_config

logger = logging.getLogger(__name__)


def generate(args: argparse.Namespace) -> int:
    config = override(
        resolve_config(args), "phantom", cohort_size=args.n, seed=args.seed
    )
    store = get_store(config)
    cohort = build_cohort(config.phantom, config.strain)
    write_cohort(cohort, store, PHANTOMS_DIR, jobs=args.jobs)
    store.write_manifest(
        PHANTOMS_DIR,
        command="phantom generate",
        config_hash=experiment_hash(config),
        seed=config.phantom.seed,
    )
    return 0


def register(commands: argparse._SubParsersAction) -> None:
    parser = commands.add_parser("phantom", help="Synthetic ONH phantoms")
    actions = parser.add_subparsers(dest="action", required=True)

    generate_parser = actions.add_parser(
        "generate", help="Generate a labelled-by-construction phantom cohort"
    )
    generate_parser.add_argument("--n", type=int, help="Cohort size")
    generate_parser.add_argument("--seed", type=int, help="Cohort seed")
    generate_parser.set_defaults(handler=generate, command="phantom generate")
