"""Point-cloud files: CSV with a JSON sidecar, and ASCII PLY for viewers."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from app.views.artifacts import PointCloudSidecar

from .types import GeometryError, OnhPointCloud

CSV_HEADER = ("x_mm", "y_mm", "z_mm", "thickness_mm", "tissue_id")


def _number(value: float) -> str:
    return repr(float(value))


def write_point_cloud_csv(cloud: OnhPointCloud, path: Path, *, seed: int | None = None) -> Path:
    """Write ``<path>`` plus ``<path>.json`` carrying frame information."""

    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for position, thickness, tissue in zip(cloud.positions, cloud.thickness, cloud.tissue):
            writer.writerow(
                [_number(position[0]), _number(position[1]), _number(position[2]),
                 _number(thickness), int(tissue)]
            )
    sidecar = PointCloudSidecar(
        n_points=cloud.n_points,
        canonical=cloud.canonical,
        bmo_points=cloud.bmo.tolist(),
        scan_axes=cloud.scan_axes.tolist(),
        seed=seed,
    )
    sidecar_path = path.with_suffix(path.suffix + ".json")
    sidecar_path.write_text(
        json.dumps(sidecar.model_dump(mode="json"), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return path


def read_point_cloud_csv(path: Path) -> OnhPointCloud:
    try:
        with path.open("r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = tuple(next(reader, ()))
            rows = [row for row in reader if row]
    except OSError as exc:
        raise GeometryError(f"cannot read point cloud {path}: {exc.strerror}") from exc
    if header != CSV_HEADER:
        raise GeometryError(f"{path}: expected header {','.join(CSV_HEADER)}")
    if not rows:
        raise GeometryError(f"{path}: point cloud is empty")
    table = np.array([[float(value) for value in row[:4]] for row in rows])
    tissue = np.array([int(row[4]) for row in rows], dtype=np.int64)

    sidecar_path = path.with_suffix(path.suffix + ".json")
    canonical, bmo, axes = False, np.zeros((0, 3)), np.eye(3)
    if sidecar_path.exists():
        sidecar = PointCloudSidecar.model_validate_json(
            sidecar_path.read_text(encoding="utf-8")
        )
        canonical = sidecar.canonical
        bmo = np.array(sidecar.bmo_points, dtype=np.float64).reshape(-1, 3)
        axes = np.array(sidecar.scan_axes, dtype=np.float64)
    return OnhPointCloud(table[:, :3], table[:, 3], tissue, canonical, bmo, axes)


def write_ply(
    positions: np.ndarray, path: Path, scalars: dict[str, np.ndarray] | None = None
) -> Path:
    """ASCII PLY vertex list with optional per-vertex scalar properties."""

    scalars = scalars or {}
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["ply", "format ascii 1.0", f"element vertex {len(positions)}"]
    lines += ["property double x", "property double y", "property double z"]
    lines += [f"property double {name}" for name in scalars]
    lines.append("end_header")
    columns = [np.asarray(values, dtype=np.float64) for values in scalars.values()]
    for index, point in enumerate(np.asarray(positions, dtype=np.float64)):
        values = [point[0], point[1], point[2]] + [column[index] for column in columns]
        lines.append(" ".join(_number(value) for value in values))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_cloud_ply(cloud: OnhPointCloud, path: Path) -> Path:
    return write_ply(cloud.positions, path, {"thickness": cloud.thickness})


__all__ = [
    "CSV_HEADER",
    "read_point_cloud_csv",
    "write_cloud_ply",
    "write_ply",
    "write_point_cloud_csv",
]
