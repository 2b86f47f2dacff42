"""Weight files: a little-endian float64 blob plus a JSON manifest."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from app.views.artifacts import ArrayEntry, WeightManifest

from .arrays import AutodiffError, DenseArray

_DTYPE = np.dtype("<f8")


def pack_weights(
    arrays: Mapping[str, DenseArray],
    *,
    seed: int,
    config_hash: str,
    extra: Mapping[str, Any] | None = None,
) -> tuple[bytes, WeightManifest]:
    """Concatenate ``arrays`` in mapping order and describe the layout."""

    entries: list[ArrayEntry] = []
    chunks: list[bytes] = []
    offset = 0
    for name, array in arrays.items():
        data = np.ascontiguousarray(array, dtype=_DTYPE)
        entries.append(ArrayEntry(name=name, shape=list(data.shape), offset=offset))
        chunks.append(data.tobytes())
        offset += data.nbytes
    manifest = WeightManifest(
        arrays=entries, seed=seed, config_hash=config_hash, extra=dict(extra or {})
    )
    return b"".join(chunks), manifest


def unpack_weights(blob: bytes, manifest: WeightManifest) -> dict[str, DenseArray]:
    arrays: dict[str, DenseArray] = {}
    for entry in manifest.arrays:
        count = int(np.prod(entry.shape)) if entry.shape else 1
        end = entry.offset + count * _DTYPE.itemsize
        if end > len(blob):
            raise AutodiffError(f"weight blob too short for array '{entry.name}'")
        data = np.frombuffer(blob, dtype=_DTYPE, count=count, offset=entry.offset)
        arrays[entry.name] = data.astype(np.float64).reshape(entry.shape)
    return arrays


def save_weights(
    stem: Path,
    arrays: Mapping[str, DenseArray],
    *,
    seed: int,
    config_hash: str,
    extra: Mapping[str, Any] | None = None,
) -> WeightManifest:
    """Write ``<stem>.bin`` and ``<stem>.json``."""

    blob, manifest = pack_weights(arrays, seed=seed, config_hash=config_hash, extra=extra)
    stem.parent.mkdir(parents=True, exist_ok=True)
    stem.with_suffix(".bin").write_bytes(blob)
    stem.with_suffix(".json").write_text(
        json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return manifest


def load_weights(stem: Path) -> tuple[dict[str, DenseArray], WeightManifest]:
    try:
        manifest = WeightManifest.model_validate_json(
            stem.with_suffix(".json").read_text(encoding="utf-8")
        )
        blob = stem.with_suffix(".bin").read_bytes()
    except OSError as exc:
        raise AutodiffError(f"cannot read weights at {stem}: {exc.strerror}") from exc
    return unpack_weights(blob, manifest), manifest


__all__ = ["load_weights", "pack_weights", "save_weights", "unpack_weights"]
