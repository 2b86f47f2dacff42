"""Point-cloud geometry: BMO frame, exact k-NN, thickness, sampling, augmentation."""

from .augment import augment, random_rotation
from .bmo import (
    canonical_transform,
    canonicalize,
    canonicalize_surfaces,
    fit_bmo_plane,
    fit_cloud_plane,
    to_canonical,
)
from .io import (
    CSV_HEADER,
    read_point_cloud_csv,
    write_cloud_ply,
    write_ply,
    write_point_cloud_csv,
)
from .knn import knn, knn_graph
from .sampling import CLOUD_POSTERIOR_TISSUES, sample_point_cloud
from .thickness import local_thickness, min_distances
from .types import (
    TISSUE_NAMES,
    AugmentationConfig,
    BmoPlane,
    BoundarySurface,
    GeometryError,
    OnhPointCloud,
    SurfaceRole,
    Tissue,
)

__all__ = [
    "AugmentationConfig",
    "BmoPlane",
    "BoundarySurface",
    "CLOUD_POSTERIOR_TISSUES",
    "CSV_HEADER",
    "GeometryError",
    "OnhPointCloud",
    "SurfaceRole",
    "TISSUE_NAMES",
    "Tissue",
    "augment",
    "canonical_transform",
    "canonicalize",
    "canonicalize_surfaces",
    "fit_bmo_plane",
    "fit_cloud_plane",
    "knn",
    "knn_graph",
    "local_thickness",
    "min_distances",
    "random_rotation",
    "read_point_cloud_csv",
    "sample_point_cloud",
    "to_canonical",
    "write_cloud_ply",
    "write_ply",
    "write_point_cloud_csv",
]
