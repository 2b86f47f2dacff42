"""``schema``: print the experiment config JSON schema."""

from __future__ import annotations

import argparse
import sys

from app.services.storage import dump_json
from app.views.experiment import experiment_schema


def schema(args: argparse.Namespace) -> int:
    sys.stdout.write(dump_json(experiment_schema()))
    return 0


def register(commands: argparse._SubParsersAction) -> None:
    parser = commands.add_parser("schema", help="Print the experiment config JSON schema")
    parser.set_defaults(handler=schema, command="schema")
