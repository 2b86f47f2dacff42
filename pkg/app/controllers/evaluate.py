"""``eval``: five-fold cross-validation of every enabled method."""

from __future__ import annotations

import argparse
import sys

from app.services.experiment import run_experiment
from app.services.storage import dump_json
from app.views.experiment import ConfigError

from .dependencies import EVAL_DIR, get_store, resolve_config


def evaluate(args: argparse.Namespace) -> int:
    if not args.config:
        raise ConfigError("--config: eval needs an experiment config file")
    config = resolve_config(args)
    result = run_experiment(config, get_store(config), jobs=args.jobs, relative=EVAL_DIR)
    sys.stdout.write(dump_json(result.summary))
    return 0


def register(commands: argparse._SubParsersAction) -> None:
    parser = commands.add_parser(
        "eval", help="Generate, label and cross-validate from one experiment config"
    )
    parser.set_defaults(handler=evaluate, command="eval")
