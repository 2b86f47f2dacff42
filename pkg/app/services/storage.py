"""Artifact directories: manifests, JSON documents, JSON lines and CSV tables."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence, TypeVar

from pydantic import BaseModel, ValidationError

from app.config.settings import settings
from app.views.artifacts import RunManifest

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)

MANIFEST_NAME = "manifest.json"


class StorageError(RuntimeError):
    """Raised when an artifact cannot be written or read back."""


def _payload(document: BaseModel | dict[str, Any]) -> Any:
    if isinstance(document, BaseModel):
        return document.model_dump(mode="json")
    return document


def dump_json(document: BaseModel | dict[str, Any]) -> str:
    return json.dumps(_payload(document), indent=2, sort_keys=True) + "\n"


class ArtifactStore:
    """Writes confined to one output root.

    Paths handed to the store are relative to ``root``; anything resolving
    outside it is refused.
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)

    def path(self, *parts: str | Path) -> Path:
        target = self.root.joinpath(*parts)
        base = self.root.resolve()
        resolved = target.resolve()
        if resolved != base and base not in resolved.parents:
            raise StorageError(f"{target} lies outside the output directory {self.root}")
        return target

    def directory(self, *parts: str | Path) -> Path:
        target = self.path(*parts)
        try:
            target.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageError(f"cannot create {target}: {exc.strerror}") from exc
        return target

    def write_text(self, relative: str | Path, text: str) -> Path:
        target = self.path(relative)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise StorageError(f"cannot write {target}: {exc.strerror}") from exc
        return target

    def write_json(self, relative: str | Path, document: BaseModel | dict[str, Any]) -> Path:
        return self.write_text(relative, dump_json(document))

    def write_jsonl(self, relative: str | Path, records: Iterable[BaseModel]) -> Path:
        lines = [
            json.dumps(record.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
            for record in records
        ]
        return self.write_text(relative, "".join(line + "\n" for line in lines))

    def write_csv(
        self, relative: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]
    ) -> Path:
        target = self.path(relative)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            with target.open("w", encoding="utf-8", newline="") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow(
                        [repr(value) if isinstance(value, float) else value for value in row]
                    )
        except OSError as exc:
            raise StorageError(f"cannot write {target}: {exc.strerror}") from exc
        return target

    def write_manifest(
        self, relative: str | Path, *, command: str, config_hash: str, seed: int
    ) -> Path:
        """``manifest.json`` inside ``relative``; carries no timestamps."""

        manifest = RunManifest(
            command=command,
            config_hash=config_hash,
            seed=seed,
            tool_version=settings.app_version,
        )
        self.directory(relative)
        path = self.write_json(Path(relative) / MANIFEST_NAME, manifest)
        logger.debug("Manifest written to %s", path)
        return path


def read_json(path: Path, schema: type[ModelT]) -> ModelT:
    try:
        return schema.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc.strerror}") from exc
    except ValidationError as exc:
        raise StorageError(f"{path}: invalid {schema.__name__}: {exc}") from exc


def read_jsonl(path: Path, schema: type[ModelT]) -> list[ModelT]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc.strerror}") from exc
    records: list[ModelT] = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(schema.model_validate_json(line))
        except ValidationError as exc:
            raise StorageError(f"{path}:{number}: invalid {schema.__name__}: {exc}") from exc
    return records


def read_manifest(directory: Path) -> RunManifest:
    return read_json(directory / MANIFEST_NAME, RunManifest)


__all__ = [
    "ArtifactStore",
    "MANIFEST_NAME",
    "StorageError",
    "dump_json",
    "read_json",
    "read_jsonl",
    "read_manifest",
]
