"""Point-to-point boundary thickness."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .types import BoundarySurface, GeometryError


def min_distances(sources: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """For each source point, the Euclidean distance to its nearest target."""

    sources = np.asarray(sources, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape[0] == 0:
        raise GeometryError("cannot measure distances to an empty point set")
    if sources.shape[0] == 0:
        return np.zeros(0)
    distances, _ = cKDTree(targets).query(sources)
    return np.asarray(distances, dtype=np.float64)


def local_thickness(anterior: BoundarySurface, posterior: BoundarySurface) -> np.ndarray:
    """Minimum distance from every anterior point to the posterior boundary."""

    if anterior.tissue != posterior.tissue:
        raise GeometryError(
            f"thickness needs boundaries of one tissue, got {anterior.tissue.name} "
            f"and {posterior.tissue.name}"
        )
    return min_distances(anterior.points, posterior.points)


__all__ = ["local_thickness", "min_distances"]
