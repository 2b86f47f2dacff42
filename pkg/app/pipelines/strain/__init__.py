"""Lamina strain from displacement fields, and the robustness label."""

from .label import (
    DEFAULT_THRESHOLD,
    Robustness,
    RobustnessLabel,
    label,
    label_field,
    label_record,
)
from .tensors import (
    StrainError,
    displacement_gradient,
    effective_strain,
    formula_names,
    get_formula,
    gradient_field,
    gradients_at,
    green_lagrange,
    infinitesimal,
    interior_lc_voxels,
    lc_average_effective_strain,
    strain_formula,
)

__all__ = [
    "DEFAULT_THRESHOLD",
    "Robustness",
    "RobustnessLabel",
    "StrainError",
    "displacement_gradient",
    "effective_strain",
    "formula_names",
    "get_formula",
    "gradient_field",
    "gradients_at",
    "green_lagrange",
    "infinitesimal",
    "interior_lc_voxels",
    "label",
    "label_field",
    "label_record",
    "lc_average_effective_strain",
    "strain_formula",
]
