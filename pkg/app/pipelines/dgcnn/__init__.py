"""DGCNN robustness classifier, its training loop and critical-point analysis."""

from .critical import (
    DENSITY_HEADER,
    DENSITY_RADIUS_MM,
    CriticalDensityMap,
    annulus_mass_fraction,
    bmo_radius,
    critical_density_map,
    pool_critical_points,
    pooled_bmo_radii,
    write_density_csv,
    write_density_ply,
)
from .network import (
    CriticalPointSet,
    DgcnnError,
    DgcnnModel,
    NetworkGraph,
    TrainingManifest,
    build_graph,
    critical_set,
    edgeconv_forward,
    forward,
    forward_features,
    init_model,
    load_model,
    loss_and_gradients,
    network_graph,
    predict_proba,
    save_model,
    weight_shapes,
)
from .training import (
    TrainingResult,
    augmentation_recipe,
    data_hash,
    evaluate_set,
    predict_set,
    train,
)

__all__ = [
    "CriticalDensityMap",
    "CriticalPointSet",
    "DENSITY_HEADER",
    "DENSITY_RADIUS_MM",
    "DgcnnError",
    "DgcnnModel",
    "NetworkGraph",
    "TrainingManifest",
    "TrainingResult",
    "annulus_mass_fraction",
    "augmentation_recipe",
    "bmo_radius",
    "build_graph",
    "critical_density_map",
    "critical_set",
    "data_hash",
    "edgeconv_forward",
    "evaluate_set",
    "forward",
    "forward_features",
    "init_model",
    "load_model",
    "loss_and_gradients",
    "network_graph",
    "pool_critical_points",
    "pooled_bmo_radii",
    "predict_proba",
    "predict_set",
    "save_model",
    "train",
    "weight_shapes",
]
