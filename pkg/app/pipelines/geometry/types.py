"""Typed containers shared across the geometry stages.

They live in their own module so phantoms, strain, the DGCNN and the
baselines can import them without pulling in any sampling code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np


class GeometryError(RuntimeError):
    """Raised when point sets or surfaces cannot support an operation."""


class Tissue(IntEnum):
    BACKGROUND = 0
    RNFL_PLT = 1
    GCL_IPL = 2
    ORL = 3
    RPE_BM = 4
    CHOROID = 5
    SCLERA = 6
    LC = 7


TISSUE_NAMES: dict[int, str] = {
    Tissue.BACKGROUND: "background",
    Tissue.RNFL_PLT: "RNFL+PLT",
    Tissue.GCL_IPL: "GCL+IPL",
    Tissue.ORL: "ORL",
    Tissue.RPE_BM: "RPE/BM",
    Tissue.CHOROID: "choroid",
    Tissue.SCLERA: "sclera",
    Tissue.LC: "LC",
}


class SurfaceRole(str, Enum):
    ANTERIOR = "anterior"
    POSTERIOR = "posterior"


def _frozen_array(value, *, dtype, name: str, ndim: int) -> np.ndarray:
    array = np.array(value, dtype=dtype)
    if array.ndim != ndim:
        raise GeometryError(f"{name} must have {ndim} dimensions, got shape {array.shape}")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class BoundarySurface:
    """Point samples of one tissue boundary, in millimetres."""

    tissue: Tissue
    role: SurfaceRole
    points: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "tissue", Tissue(self.tissue))
        object.__setattr__(self, "role", SurfaceRole(self.role))
        points = _frozen_array(self.points, dtype=np.float64, name="surface points", ndim=2)
        if points.shape[1] != 3 or points.shape[0] < 3:
            raise GeometryError(
                f"{TISSUE_NAMES[int(self.tissue)]} {self.role.value} surface needs >= 3 "
                f"points in 3D, got {points.shape}"
            )
        if not np.all(np.isfinite(points)):
            raise GeometryError(
                f"{TISSUE_NAMES[int(self.tissue)]} surface has non-finite points"
            )
        object.__setattr__(self, "points", points)

    def transformed(self, rotation: np.ndarray, origin: np.ndarray) -> "BoundarySurface":
        """Apply ``p -> R (p - origin)``."""

        return BoundarySurface(self.tissue, self.role, (self.points - origin) @ rotation.T)


@dataclass(frozen=True)
class OnhPointCloud:
    """N points with (x, y, z, thickness) channels and a tissue tag per point.

    ``scan_axes`` holds the raw scan x/y/z axes as columns, expressed in the
    cloud's current frame; ``bmo`` carries the BMO landmarks through every
    rigid transform.
    """

    positions: np.ndarray
    thickness: np.ndarray
    tissue: np.ndarray
    canonical: bool = False
    bmo: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    scan_axes: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self) -> None:
        positions = _frozen_array(self.positions, dtype=np.float64, name="positions", ndim=2)
        thickness = _frozen_array(self.thickness, dtype=np.float64, name="thickness", ndim=1)
        tissue = _frozen_array(self.tissue, dtype=np.int64, name="tissue", ndim=1)
        bmo = _frozen_array(
            np.reshape(self.bmo, (-1, 3)), dtype=np.float64, name="bmo", ndim=2
        )
        axes = _frozen_array(self.scan_axes, dtype=np.float64, name="scan_axes", ndim=2)
        count = positions.shape[0]
        if count < 1 or positions.shape[1] != 3:
            raise GeometryError(f"point cloud needs N >= 1 points in 3D, got {positions.shape}")
        if thickness.shape != (count,) or tissue.shape != (count,):
            raise GeometryError("thickness and tissue must carry one value per point")
        if axes.shape != (3, 3):
            raise GeometryError("scan_axes must be a 3x3 matrix")
        if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(thickness))):
            raise GeometryError("point cloud contains non-finite values")
        if np.any(thickness < 0):
            raise GeometryError("thickness must be non-negative")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "thickness", thickness)
        object.__setattr__(self, "tissue", tissue)
        object.__setattr__(self, "bmo", bmo)
        object.__setattr__(self, "scan_axes", axes)

    @property
    def n_points(self) -> int:
        return int(self.positions.shape[0])

    @property
    def features(self) -> np.ndarray:
        """The (N, 4) network input: x, y, z, thickness."""

        return np.column_stack([self.positions, self.thickness])

    def take(self, indices: np.ndarray) -> "OnhPointCloud":
        index = np.asarray(indices, dtype=np.intp)
        return OnhPointCloud(
            self.positions[index],
            self.thickness[index],
            self.tissue[index],
            self.canonical,
            self.bmo,
            self.scan_axes,
        )

    def rigid(
        self, rotation: np.ndarray, translation: np.ndarray, *, canonical: bool = False
    ) -> "OnhPointCloud":
        """Return ``p -> R p + t`` applied to points and landmarks."""

        rotation = np.asarray(rotation, dtype=np.float64)
        translation = np.asarray(translation, dtype=np.float64)
        return OnhPointCloud(
            self.positions @ rotation.T + translation,
            self.thickness,
            self.tissue,
            canonical,
            self.bmo @ rotation.T + translation,
            rotation @ self.scan_axes,
        )


@dataclass(frozen=True)
class BmoPlane:
    """Best-fit BMO plane ``n . x = offset``."""

    normal: np.ndarray
    offset: float
    centroid: np.ndarray

    def __post_init__(self) -> None:
        normal = _frozen_array(self.normal, dtype=np.float64, name="normal", ndim=1)
        centroid = _frozen_array(self.centroid, dtype=np.float64, name="centroid", ndim=1)
        if normal.shape != (3,) or centroid.shape != (3,):
            raise GeometryError("plane normal and centroid must be 3-vectors")
        if abs(float(np.linalg.norm(normal)) - 1.0) > 1e-9:
            raise GeometryError("plane normal must have unit length")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "centroid", centroid)
        object.__setattr__(self, "offset", float(self.offset))


@dataclass(frozen=True)
class AugmentationConfig:
    """One sample's augmentation recipe; ``seed`` fixes every random draw."""

    rotation_deg: float = 5.0
    translation_mm: float = 0.05
    crop_fraction: float = 0.95
    subsample_count: int = 1024
    noise_sigma_mm: float = 0.005
    enable_crop: bool = False
    enable_subsample: bool = False
    enable_rotation: bool = False
    enable_translation: bool = False
    enable_noise: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.crop_fraction <= 1.0:
            raise GeometryError(f"crop fraction must lie in (0, 1], got {self.crop_fraction}")
        if self.subsample_count < 1:
            raise GeometryError("subsample count must be >= 1")
        if self.noise_sigma_mm < 0 or self.rotation_deg < 0 or self.translation_mm < 0:
            raise GeometryError("augmentation ranges must be non-negative")

    @property
    def any_enabled(self) -> bool:
        return any(
            (
                self.enable_crop,
                self.enable_subsample,
                self.enable_rotation,
                self.enable_translation,
                self.enable_noise,
            )
        )


__all__ = [
    "AugmentationConfig",
    "BmoPlane",
    "BoundarySurface",
    "GeometryError",
    "OnhPointCloud",
    "SurfaceRole",
    "TISSUE_NAMES",
    "Tissue",
]
