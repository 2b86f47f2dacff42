"""BMO plane fitting and the canonical ONH frame."""

from __future__ import annotations

import numpy as np

from .types import BmoPlane, BoundarySurface, GeometryError, OnhPointCloud

_DEGENERATE_RATIO = 1e-9


def fit_bmo_plane(points: np.ndarray, anterior: np.ndarray | None = None) -> BmoPlane:
    """Least-squares plane through the BMO points.

    The normal is flipped to point along ``anterior`` (raw +z, i.e. toward
    the vitreous, by default).
    """

    array = np.asarray(points, dtype=np.float64)
    if array.ndim != 2 or array.shape[1] != 3 or array.shape[0] < 3:
        raise GeometryError(f"plane fit needs >= 3 points in 3D, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise GeometryError("BMO points contain non-finite coordinates")
    centroid = array.mean(axis=0)
    _, singular, vt = np.linalg.svd(array - centroid, full_matrices=False)
    if singular[0] == 0.0 or singular[1] <= _DEGENERATE_RATIO * singular[0]:
        raise GeometryError("BMO points are collinear or coincident; plane is undefined")
    normal = vt[2] / np.linalg.norm(vt[2])

    hint = np.array([0.0, 0.0, 1.0]) if anterior is None else np.asarray(anterior, float)
    direction = float(normal @ hint)
    if direction < 0 or (direction == 0 and normal[np.flatnonzero(normal)[0]] < 0):
        normal = -normal
    return BmoPlane(normal=normal, offset=float(normal @ centroid), centroid=centroid)


def canonical_transform(
    plane: BmoPlane, scan_x: np.ndarray, scan_z: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Rotation R and origin c such that ``p -> R (p - c)`` is the canonical frame.

    +z is the plane normal on the side of ``scan_z``; +x is the projection of
    ``scan_x`` onto the plane.
    """

    e3 = plane.normal.copy()
    if float(e3 @ scan_z) < 0:
        e3 = -e3
    projected = scan_x - (scan_x @ e3) * e3
    length = float(np.linalg.norm(projected))
    if length < 1e-12:
        raise GeometryError("scan x-axis is perpendicular to the BMO plane")
    e1 = projected / length
    e2 = np.cross(e3, e1)
    return np.vstack([e1, e2, e3]), plane.centroid.copy()


def canonicalize(cloud: OnhPointCloud, plane: BmoPlane) -> OnhPointCloud:
    """Move the cloud into the BMO-centred frame (rigid transform only)."""

    rotation, origin = canonical_transform(plane, cloud.scan_axes[:, 0], cloud.scan_axes[:, 2])
    return cloud.rigid(rotation, -rotation @ origin, canonical=True)


def canonicalize_surfaces(
    surfaces: list[BoundarySurface], plane: BmoPlane, scan_axes: np.ndarray | None = None
) -> list[BoundarySurface]:
    """Express boundary surfaces in the canonical frame of ``plane``."""

    axes = np.eye(3) if scan_axes is None else np.asarray(scan_axes, dtype=np.float64)
    rotation, origin = canonical_transform(plane, axes[:, 0], axes[:, 2])
    return [surface.transformed(rotation, origin) for surface in surfaces]


def to_canonical(
    points: np.ndarray, plane: BmoPlane, scan_axes: np.ndarray | None = None
) -> np.ndarray:
    axes = np.eye(3) if scan_axes is None else np.asarray(scan_axes, dtype=np.float64)
    rotation, origin = canonical_transform(plane, axes[:, 0], axes[:, 2])
    return (np.asarray(points, dtype=np.float64) - origin) @ rotation.T


def fit_cloud_plane(cloud: OnhPointCloud) -> BmoPlane:
    """Fit the plane of the BMO landmarks a cloud carries."""

    if cloud.bmo.shape[0] < 3:
        raise GeometryError("point cloud carries fewer than 3 BMO landmarks")
    return fit_bmo_plane(cloud.bmo, anterior=cloud.scan_axes[:, 2])


__all__ = [
    "canonical_transform",
    "canonicalize",
    "canonicalize_surfaces",
    "fit_bmo_plane",
    "fit_cloud_plane",
    "to_canonical",
]
