"""Types shared by the structural-parameter and autoencoder baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_OCTANTS = 8


class BaselineError(RuntimeError):
    """Raised when a baseline cannot measure, train or predict."""


def _octant_names(prefix: str) -> tuple[str, ...]:
    return tuple(f"{prefix}_o{index}" for index in range(N_OCTANTS))


STRUCTURAL_FEATURES: tuple[str, ...] = (
    *_octant_names("rim_width_mm"),
    *_octant_names("rnfl_thickness_mm"),
    *_octant_names("gcl_ipl_thickness_mm"),
    "prelamina_depth_mm",
    "min_prelamina_thickness_mm",
    "lc_depth_mm",
    "lc_shape_index",
    "bmo_area_mm2",
)

_NON_NEGATIVE = tuple(
    name for name in STRUCTURAL_FEATURES if "thickness" in name or "width" in name
) + ("bmo_area_mm2",)


@dataclass(frozen=True)
class StructuralParameterVector:
    """The 29 structural parameters of one ONH, in :data:`STRUCTURAL_FEATURES` order."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if values.shape != (len(STRUCTURAL_FEATURES),):
            raise BaselineError(
                f"expected {len(STRUCTURAL_FEATURES)} structural parameters, got {values.size}"
            )
        if not np.all(np.isfinite(values)):
            raise BaselineError("structural parameters must be finite")
        named = dict(zip(STRUCTURAL_FEATURES, values))
        negative = [name for name in _NON_NEGATIVE if named[name] < 0]
        if negative:
            raise BaselineError(f"negative thickness or area: {', '.join(negative)}")
        if not -1.0 <= named["lc_shape_index"] <= 1.0:
            raise BaselineError(f"shape index {named['lc_shape_index']} is outside [-1, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __getitem__(self, name: str) -> float:
        return float(self.values[STRUCTURAL_FEATURES.index(name)])

    def octants(self, prefix: str) -> np.ndarray:
        start = STRUCTURAL_FEATURES.index(f"{prefix}_o0")
        return self.values[start : start + N_OCTANTS]

    def as_dict(self) -> dict[str, float]:
        return {name: float(value) for name, value in zip(STRUCTURAL_FEATURES, self.values)}


__all__ = [
    "BaselineError",
    "N_OCTANTS",
    "STRUCTURAL_FEATURES",
    "StructuralParameterVector",
]
