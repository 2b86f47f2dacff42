"""Access to the JSON files bundled under ``app/resources``."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

RESOURCE_ROOT = Path(__file__).resolve().parents[1] / "resources"


def load_resource_json(relative_path: str) -> Mapping[str, Any]:
    """Load a JSON resource; a missing file yields an empty mapping."""

    resource_path = RESOURCE_ROOT / relative_path
    if not resource_path.exists():
        return {}
    with resource_path.open("r", encoding="utf-8") as resource_file:
        return json.load(resource_file)


__all__ = ["RESOURCE_ROOT", "load_resource_json"]
