"""Pydantic schemas for the sidecars and manifests written next to artifacts."""

from typing import Any, Optional

from pydantic import BaseModel, Field


class RunManifest(BaseModel):
    """Provenance written into every artifact directory."""

    command: str = Field(..., description="Subcommand that produced the directory")
    config_hash: str = Field(..., description="SHA-256 of the canonical config JSON")
    seed: int
    tool_version: str


class ArrayEntry(BaseModel):
    name: str
    shape: list[int]
    offset: int = Field(..., ge=0, description="Byte offset inside the .bin blob")


class WeightManifest(BaseModel):
    """Layout of a little-endian float64 weight blob."""

    arrays: list[ArrayEntry]
    seed: int
    config_hash: str
    extra: dict[str, Any] = Field(default_factory=dict)


class VolumeSidecar(BaseModel):
    """Metadata for a raw uint8 label volume."""

    dims: list[int]
    spacing_mm: list[float]
    label_names: dict[str, str]
    bmo_points: list[list[float]]
    dtype: str = "uint8"
    byte_order: str = "little"


class DisplacementSidecar(BaseModel):
    """Metadata for a raw float32 displacement field (3 interleaved channels)."""

    dims: list[int]
    spacing_mm: list[float]
    channels: int = 3
    translation_mm: list[float]
    lc_voxels: int
    dtype: str = "float32"
    byte_order: str = "little"


class PointCloudSidecar(BaseModel):
    """Frame information that the point-cloud CSV cannot carry."""

    n_points: int
    canonical: bool
    bmo_points: list[list[float]]
    scan_axes: list[list[float]]
    seed: Optional[int] = None


class CohortEntry(BaseModel):
    id: str
    seed: int
    params: dict[str, Any]


class CohortIndex(BaseModel):
    """Parameter draws of a generated cohort, in generation order."""

    seed: int
    fragility_center: float
    entries: list[CohortEntry]


class TreeArtifact(BaseModel):
    """Flat node arrays of one decision tree; leaves have ``feature == -1``."""

    feature: list[int]
    threshold: list[float]
    left: list[int]
    right: list[int]
    counts: list[list[int]] = Field(..., description="Robust and fragile samples per node")


class ForestArtifact(BaseModel):
    n_features: int
    seed: int
    config_hash: str = ""
    trees: list[TreeArtifact]
