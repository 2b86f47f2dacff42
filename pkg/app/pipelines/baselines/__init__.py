"""Comparison methods: structural-parameter random forest and section autoencoder."""

from .autoencoder import (
    AutoencoderModel,
    ae_classify,
    ae_classify_many,
    build_autoencoder_graph,
    build_classifier_graph,
    encode,
    init_autoencoder,
    layer_shapes,
    load_autoencoder,
    one_hot,
    reconstruct,
    reconstruction_dice,
    save_autoencoder,
    train_autoencoder,
    train_classifier,
)
from .dice import dice, dice_per_class
from .forest import (
    DecisionTree,
    RandomForest,
    best_split,
    forest_artifact,
    gini,
    grow_tree,
    load_forest,
    rf_predict,
    rf_predict_many,
    save_forest,
    train_random_forest,
)
from .structural import (
    FEATURE_HEADER,
    bmo_area,
    extract_structural_parameters,
    octant_of,
    read_features_csv,
    shape_index,
    write_features_csv,
)
from .types import N_OCTANTS, STRUCTURAL_FEATURES, BaselineError, StructuralParameterVector

__all__ = [
    "AutoencoderModel",
    "BaselineError",
    "DecisionTree",
    "FEATURE_HEADER",
    "N_OCTANTS",
    "RandomForest",
    "STRUCTURAL_FEATURES",
    "StructuralParameterVector",
    "ae_classify",
    "ae_classify_many",
    "best_split",
    "bmo_area",
    "build_autoencoder_graph",
    "build_classifier_graph",
    "dice",
    "dice_per_class",
    "encode",
    "extract_structural_parameters",
    "forest_artifact",
    "gini",
    "grow_tree",
    "init_autoencoder",
    "layer_shapes",
    "load_autoencoder",
    "load_forest",
    "octant_of",
    "one_hot",
    "read_features_csv",
    "reconstruct",
    "reconstruction_dice",
    "rf_predict",
    "rf_predict_many",
    "save_autoencoder",
    "save_forest",
    "shape_index",
    "train_autoencoder",
    "train_classifier",
    "train_random_forest",
    "write_features_csv",
]
