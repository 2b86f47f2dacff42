"""Critical-point pooling and the neighbour-count density map."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from app.pipelines.geometry import OnhPointCloud, write_ply

from .network import CriticalPointSet, DgcnnError

DENSITY_RADIUS_MM = 0.075
DENSITY_HEADER = ("x_mm", "y_mm", "z_mm", "count")

_CHUNK_ENTRIES = 4_000_000


@dataclass(frozen=True)
class CriticalDensityMap:
    points: np.ndarray
    counts: np.ndarray
    radius_mm: float


def _unique_critical(cloud: OnhPointCloud, critical: CriticalPointSet) -> np.ndarray:
    return np.unique(cloud.positions[critical.indices], axis=0)


def _check_pool(clouds: Sequence[OnhPointCloud], sets: Sequence[CriticalPointSet]) -> None:
    if len(clouds) != len(sets):
        raise DgcnnError(f"{len(clouds)} clouds but {len(sets)} critical sets")
    for position, cloud in enumerate(clouds):
        if not cloud.canonical:
            raise DgcnnError(f"cloud {position} is not in the canonical BMO frame")


def pool_critical_points(
    clouds: Sequence[OnhPointCloud], sets: Sequence[CriticalPointSet]
) -> np.ndarray:
    """Critical positions of every ONH, deduplicated per ONH, stacked in input order."""

    _check_pool(clouds, sets)
    pooled = [_unique_critical(cloud, critical) for cloud, critical in zip(clouds, sets)]
    if not pooled:
        return np.zeros((0, 3))
    return np.concatenate(pooled)


def pooled_bmo_radii(
    clouds: Sequence[OnhPointCloud], sets: Sequence[CriticalPointSet]
) -> np.ndarray:
    """BMO radius of the owning ONH for every row of :func:`pool_critical_points`."""

    _check_pool(clouds, sets)
    radii = [
        np.full(_unique_critical(cloud, critical).shape[0], bmo_radius(cloud))
        for cloud, critical in zip(clouds, sets)
    ]
    if not radii:
        return np.zeros(0)
    return np.concatenate(radii)


def critical_density_map(
    points: np.ndarray, radius: float = DENSITY_RADIUS_MM
) -> CriticalDensityMap:
    """For each pooled point, how many other pooled points lie within ``radius``."""

    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if points.shape[0] == 0:
        raise DgcnnError("no critical points to build a density map from")
    if radius <= 0:
        raise DgcnnError(f"density radius must be positive, got {radius}")
    count = points.shape[0]
    chunk = max(1, _CHUNK_ENTRIES // count)
    counts = np.empty(count, dtype=np.int64)
    for start in range(0, count, chunk):
        stop = min(start + chunk, count)
        distances = cdist(points[start:stop], points)
        distances[np.arange(stop - start), np.arange(start, stop)] = np.inf
        counts[start:stop] = np.count_nonzero(distances <= radius, axis=1)
    return CriticalDensityMap(points, counts, float(radius))


def bmo_radius(cloud: OnhPointCloud) -> float:
    """Mean distance of the BMO landmarks from the canal axis (canonical frame)."""

    if not cloud.canonical:
        raise DgcnnError("BMO radius needs a canonical cloud")
    if cloud.bmo.shape[0] == 0:
        raise DgcnnError("cloud carries no BMO landmarks")
    return float(np.mean(np.hypot(cloud.bmo[:, 0], cloud.bmo[:, 1])))


def annulus_mass_fraction(
    density: CriticalDensityMap,
    radius_mm: float | np.ndarray,
    *,
    inner: float = 0.7,
    outer: float = 1.5,
) -> float:
    """Share of density mass within ``[inner, outer] * radius_mm`` of the canal axis.

    ``radius_mm`` is one BMO radius or one per density point, so pooled points
    are measured against their own ONH. Each point weighs its neighbour count;
    a map with no neighbours at all falls back to weighing every point equally.
    """

    radius = np.asarray(radius_mm, dtype=np.float64)
    if radius.ndim and radius.shape != density.counts.shape:
        raise DgcnnError(
            f"{radius.size} BMO radii for {density.counts.size} density points"
        )
    if np.any(radius <= 0) or not 0 <= inner < outer:
        raise DgcnnError("annulus needs 0 <= inner < outer and a positive BMO radius")
    rho = np.hypot(density.points[:, 0], density.points[:, 1])
    inside = (rho >= inner * radius) & (rho <= outer * radius)
    weights = density.counts.astype(np.float64)
    if weights.sum() == 0:
        weights = np.ones_like(weights)
    return float(weights[inside].sum() / weights.sum())


def write_density_csv(density: CriticalDensityMap, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(DENSITY_HEADER)
        for point, count in zip(density.points, density.counts):
            writer.writerow([repr(float(value)) for value in point] + [int(count)])
    return path


def write_density_ply(density: CriticalDensityMap, path: Path) -> Path:
    return write_ply(density.points, path, {"count": density.counts})


__all__ = [
    "CriticalDensityMap",
    "DENSITY_HEADER",
    "DENSITY_RADIUS_MM",
    "annulus_mass_fraction",
    "bmo_radius",
    "critical_density_map",
    "pool_critical_points",
    "pooled_bmo_radii",
    "write_density_csv",
    "write_density_ply",
]
