"""Containers for synthetic ONH scans: grid, parameters, volume and field."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Mapping

import numpy as np

from app.config.settings import FULL_RESOLUTION_DIMS, FULL_RESOLUTION_SPACING_MM, PhantomConfig
from app.pipelines.geometry import TISSUE_NAMES, Tissue


class PhantomError(RuntimeError):
    """Raised when phantom parameters describe an impossible anatomy."""


LABEL_NAMES: dict[str, str] = {str(int(tissue)): TISSUE_NAMES[tissue] for tissue in Tissue}

THICKNESS_KEYS: tuple[str, ...] = (
    "rnfl",
    "gcl_ipl",
    "orl",
    "rpe_bm",
    "choroid",
    "sclera",
    "lc",
)


@dataclass(frozen=True)
class VolumeGrid:
    """Voxel raster indexed ``[b, a, p]`` (B-scan, A-scan, pixel in depth).

    Voxel ``(b, a, p)`` sits at ``x = a*sa``, ``y = b*sb``, depth ``p*sp``;
    the raw scan frame uses ``z = -depth`` so anterior is +z.
    """

    dims: tuple[int, int, int] = FULL_RESOLUTION_DIMS
    spacing_mm: tuple[float, float, float] = FULL_RESOLUTION_SPACING_MM

    def __post_init__(self) -> None:
        dims = tuple(int(size) for size in self.dims)
        spacing = tuple(float(step) for step in self.spacing_mm)
        if len(dims) != 3 or len(spacing) != 3:
            raise PhantomError("grid dims and spacing need three axes")
        if min(dims) < 1:
            raise PhantomError(f"grid dims must be positive, got {dims}")
        if min(spacing) <= 0 or not np.all(np.isfinite(spacing)):
            raise PhantomError(f"grid spacing must be positive, got {spacing}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing_mm", spacing)

    @classmethod
    def from_config(cls, config: PhantomConfig) -> "VolumeGrid":
        return cls(tuple(config.dims), config.spacing_mm)

    @property
    def extent_mm(self) -> tuple[float, float, float]:
        return tuple(size * step for size, step in zip(self.dims, self.spacing_mm))

    @property
    def canal_center_mm(self) -> tuple[float, float]:
        """Canal axis position ``(x, y)``: the centre of the lateral raster."""

        n_b, n_a, _ = self.dims
        s_b, s_a, _ = self.spacing_mm
        return ((n_a - 1) / 2.0 * s_a, (n_b - 1) / 2.0 * s_b)

    @property
    def lateral_half_width_mm(self) -> float:
        n_b, n_a, _ = self.dims
        s_b, s_a, _ = self.spacing_mm
        return min((n_a - 1) / 2.0 * s_a, (n_b - 1) / 2.0 * s_b)

    def column_coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """``(x, y)`` of every A-scan column, each shaped ``(n_b, n_a)``."""

        n_b, n_a, _ = self.dims
        s_b, s_a, _ = self.spacing_mm
        y, x = np.meshgrid(np.arange(n_b) * s_b, np.arange(n_a) * s_a, indexing="ij")
        return x, y

    def depths(self) -> np.ndarray:
        return np.arange(self.dims[2]) * self.spacing_mm[2]


@dataclass(frozen=True)
class PhantomParams:
    """Anatomy of one synthetic ONH plus its latent fragility score."""

    bmo_radius_mm: float
    cup_depth_mm: float
    lc_depth_mm: float
    lc_curvature_radius_mm: float
    thickness_mm: Mapping[str, float]
    canal_wall_angle_deg: float = 0.0
    fragility: float = 0.5

    def __post_init__(self) -> None:
        lengths = {
            "bmo_radius_mm": self.bmo_radius_mm,
            "cup_depth_mm": self.cup_depth_mm,
            "lc_depth_mm": self.lc_depth_mm,
            "lc_curvature_radius_mm": self.lc_curvature_radius_mm,
        }
        missing = [key for key in THICKNESS_KEYS if key not in self.thickness_mm]
        unknown = sorted(set(self.thickness_mm) - set(THICKNESS_KEYS))
        if missing or unknown:
            raise PhantomError(
                f"thickness_mm needs exactly {', '.join(THICKNESS_KEYS)}"
                f" (missing: {missing or '-'}, unknown: {unknown or '-'})"
            )
        lengths.update(
            {f"thickness_mm.{key}": self.thickness_mm[key] for key in THICKNESS_KEYS}
        )
        for name, value in lengths.items():
            if not np.isfinite(value) or value <= 0:
                raise PhantomError(f"{name} must be a positive length, got {value}")
        if not 0.0 <= self.fragility <= 1.0:
            raise PhantomError(f"fragility must lie in [0, 1], got {self.fragility}")
        if not -45.0 < self.canal_wall_angle_deg < 45.0:
            raise PhantomError(
                f"canal_wall_angle_deg must lie in (-45, 45), got {self.canal_wall_angle_deg}"
            )
        object.__setattr__(
            self,
            "thickness_mm",
            {key: float(self.thickness_mm[key]) for key in THICKNESS_KEYS},
        )

    def to_dict(self) -> dict[str, Any]:
        payload = asdict(self)
        payload["thickness_mm"] = dict(self.thickness_mm)
        return payload

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "PhantomParams":
        try:
            return cls(
                bmo_radius_mm=float(payload["bmo_radius_mm"]),
                cup_depth_mm=float(payload["cup_depth_mm"]),
                lc_depth_mm=float(payload["lc_depth_mm"]),
                lc_curvature_radius_mm=float(payload["lc_curvature_radius_mm"]),
                thickness_mm=dict(payload["thickness_mm"]),
                canal_wall_angle_deg=float(payload.get("canal_wall_angle_deg", 0.0)),
                fragility=float(payload.get("fragility", 0.5)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise PhantomError(f"invalid phantom parameters: {exc}") from exc


@dataclass(frozen=True)
class PhantomTruth:
    """Generator ground truth, in the raw scan frame."""

    canal_center_mm: tuple[float, float]
    bmo_depth_mm: float
    bmo_radius_mm: float
    prelamina_depth_mm: float
    lc_depth_mm: float

    @property
    def bmo_area_mm2(self) -> float:
        return float(np.pi * self.bmo_radius_mm**2)


@dataclass(frozen=True)
class SegmentedVolume:
    """Tissue label per voxel plus the BMO rim, on a :class:`VolumeGrid`."""

    labels: np.ndarray
    grid: VolumeGrid
    bmo_points: np.ndarray
    truth: PhantomTruth | None = None

    def __post_init__(self) -> None:
        labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if labels.shape != self.grid.dims:
            raise PhantomError(
                f"labels shape {labels.shape} does not match grid {self.grid.dims}"
            )
        if labels.size and int(labels.max()) > int(max(Tissue)):
            raise PhantomError(f"label values must be <= {int(max(Tissue))}")
        bmo = np.array(self.bmo_points, dtype=np.float64).reshape(-1, 3)
        labels.setflags(write=False)
        bmo.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "bmo_points", bmo)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.grid.dims

    @property
    def spacing_mm(self) -> tuple[float, float, float]:
        return self.grid.spacing_mm

    def mask(self, tissue: Tissue) -> np.ndarray:
        return self.labels == int(tissue)


@dataclass(frozen=True)
class DisplacementField:
    """Per-voxel displacement (mm), components in ``(b, a, p)`` axis order."""

    u: np.ndarray
    spacing_mm: tuple[float, float, float]
    lc_mask: np.ndarray
    translation_mm: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        u = np.array(self.u, dtype=np.float64)
        mask = np.array(self.lc_mask, dtype=bool)
        spacing = tuple(float(step) for step in self.spacing_mm)
        if u.ndim != 4 or u.shape[-1] != 3:
            raise PhantomError(f"displacement must be shaped (nb, na, np, 3), got {u.shape}")
        if mask.shape != u.shape[:3]:
            raise PhantomError(f"LC mask shape {mask.shape} does not match field {u.shape[:3]}")
        if len(spacing) != 3 or min(spacing) <= 0:
            raise PhantomError(f"spacing must be three positive values, got {spacing}")
        if not np.all(np.isfinite(u)):
            raise PhantomError("displacement field has non-finite components")
        translation = np.array(self.translation_mm, dtype=np.float64).reshape(3)
        for array in (u, mask, translation):
            array.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "lc_mask", mask)
        object.__setattr__(self, "spacing_mm", spacing)
        object.__setattr__(self, "translation_mm", translation)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(self.u.shape[:3])


__all__ = [
    "DisplacementField",
    "LABEL_NAMES",
    "PhantomError",
    "PhantomParams",
    "PhantomTruth",
    "SegmentedVolume",
    "THICKNESS_KEYS",
    "VolumeGrid",
]
