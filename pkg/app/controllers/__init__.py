"""Command controllers; each module registers one command group."""

from . import critical, evaluate, extract, label, phantom, report, schema, train

COMMAND_GROUPS = (phantom, label, extract, train, evaluate, critical, report, schema)

__all__ = [
    "COMMAND_GROUPS",
    "critical",
    "evaluate",
    "extract",
    "label",
    "phantom",
    "report",
    "schema",
    "train",
]
