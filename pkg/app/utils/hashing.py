"""Stable hashes for configs, datasets and weight arrays."""

from __future__ import annotations

import hashlib
import json
from typing import Any, Iterable, Mapping

import numpy as np
from pydantic import BaseModel


def canonical_json(payload: Any) -> str:
    """Serialise ``payload`` with sorted keys and compact separators."""

    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(payload: Any) -> str:
    """Return the SHA-256 hex digest of a config's canonical JSON."""

    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def array_digest(arrays: Mapping[str, np.ndarray] | Iterable[np.ndarray]) -> str:
    """Hash array names, shapes and little-endian float64 bytes in order."""

    digest = hashlib.sha256()
    if isinstance(arrays, Mapping):
        items = list(arrays.items())
    else:
        items = [(str(index), array) for index, array in enumerate(arrays)]
    for name, array in items:
        data = np.ascontiguousarray(array, dtype="<f8")
        digest.update(name.encode("utf-8"))
        digest.update(repr(tuple(data.shape)).encode("utf-8"))
        digest.update(data.tobytes())
    return digest.hexdigest()


__all__ = ["canonical_json", "config_hash", "array_digest"]
