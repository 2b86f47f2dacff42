"""Structural ONH parameters measured from boundary surfaces in the BMO frame.

Octants are 45 degree sectors about the canal axis, octant 0 starting at +x
and counting counterclockwise. Depths are positive below the BMO plane.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from app.pipelines.geometry import (
    TISSUE_NAMES,
    BmoPlane,
    BoundarySurface,
    GeometryError,
    SurfaceRole,
    Tissue,
    canonicalize_surfaces,
    min_distances,
    to_canonical,
)
from app.pipelines.phantom import SegmentedVolume

from .types import N_OCTANTS, STRUCTURAL_FEATURES, BaselineError, StructuralParameterVector

logger = logging.getLogger(__name__)

THICKNESS_RADIUS_FACTOR = 1.5
FLAT_CURVATURE = 1e-6
FEATURE_HEADER = ("id", *STRUCTURAL_FEATURES)


def octant_of(points: np.ndarray) -> np.ndarray:
    angle = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2.0 * np.pi)
    return np.minimum((angle // (np.pi / 4)).astype(np.int64), N_OCTANTS - 1)


def _octant_means(values: np.ndarray, octants: np.ndarray, what: str) -> np.ndarray:
    means = np.empty(N_OCTANTS)
    for octant in range(N_OCTANTS):
        chosen = values[octants == octant]
        if chosen.size == 0:
            raise BaselineError(f"no {what} samples fall in octant {octant}")
        means[octant] = chosen.mean()
    return means


def bmo_area(points: np.ndarray) -> float:
    """Shoelace area of BMO points projected on the xy plane, ordered by angle."""

    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] < 3:
        raise BaselineError("BMO area needs at least 3 points")
    centre = points[:, :2].mean(axis=0)
    order = np.argsort(np.arctan2(points[:, 1] - centre[1], points[:, 0] - centre[0]))
    x, y = points[order, 0], points[order, 1]
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def shape_index(points: np.ndarray) -> float:
    """Global shape index of a surface from a least-squares quadric ``z(x, y)``.

    ``S = 2/pi * arctan((k1 + k2) / (k1 - k2))`` with ``k1 >= k2`` the
    eigenvalues of the fitted Hessian; +1 is a bowl opening toward +z.
    """

    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] < 6:
        raise BaselineError("quadric fit needs at least 6 surface points")
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    design = np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)])
    coeffs, *_ = np.linalg.lstsq(design, z, rcond=None)
    a, b, c = coeffs[:3]
    k2, k1 = np.linalg.eigvalsh(np.array([[2.0 * a, b], [b, 2.0 * c]]))
    if abs(k1) < FLAT_CURVATURE and abs(k2) < FLAT_CURVATURE:
        return 0.0
    return float(2.0 / np.pi * np.arctan2(k1 + k2, k1 - k2))


def _surface(
    surfaces: dict[tuple[Tissue, SurfaceRole], BoundarySurface],
    tissue: Tissue,
    role: SurfaceRole,
) -> np.ndarray:
    try:
        return surfaces[(tissue, role)].points
    except KeyError as exc:
        raise BaselineError(
            f"missing {TISSUE_NAMES[int(tissue)]} {role.value} surface"
        ) from exc


def _axis_point(points: np.ndarray) -> np.ndarray:
    return points[int(np.argmin(np.hypot(points[:, 0], points[:, 1])))]


def _layer_thickness(
    anterior: np.ndarray, posterior: np.ndarray, radius: float, band: float, what: str
) -> np.ndarray:
    """Octant means of the normal-direction layer thickness on a circle."""

    rho = np.hypot(anterior[:, 0], anterior[:, 1])
    ring = anterior[np.abs(rho - radius) <= band]
    if ring.shape[0] == 0:
        raise BaselineError(f"no {what} boundary points at {radius:.3f} mm from the canal axis")
    _, nearest = cKDTree(posterior[:, :2]).query(ring[:, :2])
    thickness = np.maximum(ring[:, 2] - posterior[nearest, 2], 0.0)
    return _octant_means(thickness, octant_of(ring), what)


def extract_structural_parameters(
    volume: SegmentedVolume,
    surfaces: Sequence[BoundarySurface],
    plane: BmoPlane,
    *,
    scan_axes: np.ndarray | None = None,
) -> StructuralParameterVector:
    if volume.bmo_points.shape[0] < 3:
        raise BaselineError("volume carries fewer than 3 BMO points")
    try:
        moved = canonicalize_surfaces(list(surfaces), plane, scan_axes)
        bmo = to_canonical(volume.bmo_points, plane, scan_axes)
    except GeometryError as exc:
        raise BaselineError(f"cannot move the ONH into the BMO frame: {exc}") from exc
    by_key = {(surface.tissue, surface.role): surface for surface in moved}

    ilm = _surface(by_key, Tissue.RNFL_PLT, SurfaceRole.ANTERIOR)
    rnfl_bottom = _surface(by_key, Tissue.RNFL_PLT, SurfaceRole.POSTERIOR)
    gcl_top = _surface(by_key, Tissue.GCL_IPL, SurfaceRole.ANTERIOR)
    gcl_bottom = _surface(by_key, Tissue.GCL_IPL, SurfaceRole.POSTERIOR)
    lc_top = _surface(by_key, Tissue.LC, SurfaceRole.ANTERIOR)

    radius = float(np.mean(np.hypot(bmo[:, 0], bmo[:, 1])))
    band = float(max(volume.spacing_mm[0], volume.spacing_mm[1]))
    ring = THICKNESS_RADIUS_FACTOR * radius

    rim = _octant_means(min_distances(bmo, ilm), octant_of(bmo), "rim width")
    rnfl = _layer_thickness(ilm, rnfl_bottom, ring, band, "RNFL")
    gcl = _layer_thickness(gcl_top, gcl_bottom, ring, band, "GCL+IPL")

    in_canal = ilm[np.hypot(ilm[:, 0], ilm[:, 1]) < radius]
    if in_canal.shape[0] == 0:
        raise BaselineError("no ILM points inside the BMO opening")
    prelamina_thickness = float(min_distances(in_canal, lc_top).min())

    values = np.concatenate(
        [
            rim,
            rnfl,
            gcl,
            [
                -float(_axis_point(ilm)[2]),
                prelamina_thickness,
                -float(_axis_point(lc_top)[2]),
                shape_index(lc_top),
                bmo_area(bmo),
            ],
        ]
    )
    return StructuralParameterVector(values)


def write_features_csv(
    rows: Sequence[tuple[str, StructuralParameterVector]], path: Path
) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(FEATURE_HEADER)
        for sample_id, vector in rows:
            writer.writerow([sample_id, *(repr(float(value)) for value in vector.values)])
    return path


def read_features_csv(path: Path) -> tuple[list[str], np.ndarray]:
    try:
        with path.open("r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = tuple(next(reader, ()))
            rows = [row for row in reader if row]
    except OSError as exc:
        raise BaselineError(f"cannot read features {path}: {exc.strerror}") from exc
    if header != FEATURE_HEADER:
        raise BaselineError(f"{path}: unexpected feature header")
    ids = [row[0] for row in rows]
    table = np.array([[float(value) for value in row[1:]] for row in rows], dtype=np.float64)
    return ids, table.reshape(len(rows), len(STRUCTURAL_FEATURES))


__all__ = [
    "FEATURE_HEADER",
    "bmo_area",
    "extract_structural_parameters",
    "octant_of",
    "read_features_csv",
    "shape_index",
    "write_features_csv",
]
