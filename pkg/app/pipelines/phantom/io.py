"""Raw volume and field files with JSON sidecars, plus surface tables."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ValidationError

from app.pipelines.geometry import BoundarySurface, SurfaceRole, Tissue
from app.views.artifacts import DisplacementSidecar, VolumeSidecar

from .types import (
    LABEL_NAMES,
    DisplacementField,
    PhantomError,
    PhantomParams,
    SegmentedVolume,
    VolumeGrid,
)

SURFACE_HEADER = ("tissue_id", "role", "x_mm", "y_mm", "z_mm")


def _write_json(path: Path, model: BaseModel | dict) -> None:
    payload = model.model_dump(mode="json") if isinstance(model, BaseModel) else model
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _read_sidecar(path: Path, schema: type[BaseModel]):
    try:
        return schema.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise PhantomError(f"cannot read {path}: {exc.strerror}") from exc
    except ValidationError as exc:
        raise PhantomError(f"{path}: invalid sidecar ({exc.error_count()} errors)") from exc


def _read_raw(path: Path, dtype: str, count: int) -> np.ndarray:
    try:
        data = np.fromfile(path, dtype=np.dtype(dtype))
    except OSError as exc:
        raise PhantomError(f"cannot read {path}: {exc.strerror}") from exc
    if data.size != count:
        raise PhantomError(f"{path}: expected {count} values, found {data.size}")
    return data


def write_volume(volume: SegmentedVolume, stem: Path) -> Path:
    """Write ``<stem>.raw`` (uint8 labels, C order) and ``<stem>.json``."""

    stem.parent.mkdir(parents=True, exist_ok=True)
    raw_path = stem.with_suffix(".raw")
    volume.labels.astype("<u1").tofile(raw_path)
    _write_json(
        stem.with_suffix(".json"),
        VolumeSidecar(
            dims=list(volume.dims),
            spacing_mm=list(volume.spacing_mm),
            label_names=LABEL_NAMES,
            bmo_points=volume.bmo_points.tolist(),
        ),
    )
    return raw_path


def read_volume(stem: Path) -> SegmentedVolume:
    sidecar = _read_sidecar(stem.with_suffix(".json"), VolumeSidecar)
    dims = tuple(sidecar.dims)
    labels = _read_raw(stem.with_suffix(".raw"), "<u1", int(np.prod(dims)))
    grid = VolumeGrid(dims, tuple(sidecar.spacing_mm))
    return SegmentedVolume(labels.reshape(dims), grid, np.array(sidecar.bmo_points))


def write_displacement(field: DisplacementField, stem: Path) -> Path:
    """Write ``<stem>.raw`` (float32, 3 interleaved channels) and ``<stem>.json``."""

    stem.parent.mkdir(parents=True, exist_ok=True)
    raw_path = stem.with_suffix(".raw")
    field.u.astype("<f4").tofile(raw_path)
    _write_json(
        stem.with_suffix(".json"),
        DisplacementSidecar(
            dims=list(field.dims),
            spacing_mm=list(field.spacing_mm),
            translation_mm=field.translation_mm.tolist(),
            lc_voxels=int(field.lc_mask.sum()),
        ),
    )
    return raw_path


def read_displacement(stem: Path, volume: SegmentedVolume) -> DisplacementField:
    """Load a field; its LC mask comes from the matching label volume."""

    sidecar = _read_sidecar(stem.with_suffix(".json"), DisplacementSidecar)
    dims = tuple(sidecar.dims)
    if dims != volume.dims:
        raise PhantomError(f"{stem}: field dims {dims} do not match volume {volume.dims}")
    if sidecar.channels != 3:
        raise PhantomError(f"{stem}: expected 3 channels, found {sidecar.channels}")
    data = _read_raw(stem.with_suffix(".raw"), "<f4", int(np.prod(dims)) * 3)
    mask = volume.mask(Tissue.LC)
    if int(mask.sum()) != sidecar.lc_voxels:
        raise PhantomError(
            f"{stem}: sidecar lists {sidecar.lc_voxels} LC voxels, volume has {int(mask.sum())}"
        )
    return DisplacementField(
        data.reshape(dims + (3,)).astype(np.float64),
        tuple(sidecar.spacing_mm),
        mask,
        np.array(sidecar.translation_mm),
    )


def write_surfaces_csv(surfaces: list[BoundarySurface], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SURFACE_HEADER)
        for surface in surfaces:
            for x, y, z in surface.points:
                writer.writerow(
                    [int(surface.tissue), surface.role.value, repr(float(x)),
                     repr(float(y)), repr(float(z))]
                )
    return path


def read_surfaces_csv(path: Path) -> list[BoundarySurface]:
    """Surfaces in first-appearance order of their (tissue, role) pair."""

    grouped: dict[tuple[int, str], list[list[float]]] = {}
    try:
        with path.open("r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            if tuple(next(reader, ())) != SURFACE_HEADER:
                raise PhantomError(f"{path}: expected header {','.join(SURFACE_HEADER)}")
            for row in reader:
                if row:
                    key = (int(row[0]), row[1])
                    grouped.setdefault(key, []).append([float(value) for value in row[2:5]])
    except OSError as exc:
        raise PhantomError(f"cannot read {path}: {exc.strerror}") from exc
    return [
        BoundarySurface(Tissue(tissue), SurfaceRole(role), np.array(points))
        for (tissue, role), points in grouped.items()
    ]


def write_params(params: PhantomParams, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_json(path, params.to_dict())
    return path


def read_params(path: Path) -> PhantomParams:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise PhantomError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise PhantomError(f"{path}: {exc.msg} (line {exc.lineno})") from exc
    return PhantomParams.from_dict(payload)


__all__ = [
    "SURFACE_HEADER",
    "read_displacement",
    "read_params",
    "read_surfaces_csv",
    "read_volume",
    "write_displacement",
    "write_params",
    "write_surfaces_csv",
    "write_volume",
]
