"""Anatomy ranges and geometry-fragility coupling, read from the resource file."""

from __future__ import annotations

import json
from functools import lru_cache
from typing import Any, Mapping

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from app.utils.resources import load_resource_json

from .types import THICKNESS_KEYS, PhantomError

Range = tuple[float, float]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ParameterRanges(_Strict):
    """Uniform sampling ranges for every anatomical parameter."""

    bmo_radius_mm: Range = (0.75, 1.05)
    cup_depth_mm: Range = (0.10, 0.40)
    lc_depth_mm: Range = (0.28, 0.45)
    lc_curvature_radius_mm: Range = (3.5, 6.0)
    canal_wall_angle_deg: Range = (-10.0, 10.0)
    thickness_mm: dict[str, Range] = Field(
        default_factory=lambda: {
            "rnfl": (0.08, 0.14),
            "gcl_ipl": (0.06, 0.09),
            "orl": (0.10, 0.14),
            "rpe_bm": (0.02, 0.03),
            "choroid": (0.08, 0.15),
            "sclera": (0.35, 0.50),
            "lc": (0.18, 0.28),
        }
    )

    @field_validator(
        "bmo_radius_mm", "cup_depth_mm", "lc_depth_mm", "lc_curvature_radius_mm",
        "canal_wall_angle_deg",
    )
    @classmethod
    def _ordered(cls, value: Range) -> Range:
        if value[0] > value[1]:
            raise ValueError("range lower bound exceeds upper bound")
        return value

    @field_validator("thickness_mm")
    @classmethod
    def _all_tissues(cls, value: dict[str, Range]) -> dict[str, Range]:
        if set(value) != set(THICKNESS_KEYS):
            raise ValueError(f"thickness ranges need exactly {', '.join(THICKNESS_KEYS)}")
        for key, (low, high) in value.items():
            if low <= 0 or low > high:
                raise ValueError(f"thickness range for {key} must be positive and ordered")
        return value

    def midpoint(self, name: str) -> float:
        low, high = getattr(self, name)
        return 0.5 * (low + high)


class AnatomyShape(_Strict):
    """Shape constants of the layered anatomy."""

    bmo_depth_fraction: float = Field(default=0.40, gt=0.0, lt=1.0)
    rnfl_rim_gain: float = Field(default=1.5, ge=0.0)
    rnfl_rim_width_mm: float = Field(default=0.3, gt=0.0)
    rnfl_sector_gain: float = Field(default=0.25, ge=0.0, lt=1.0)
    cup_width_factor: float = Field(default=0.6, gt=0.0)
    ilm_ripple_mm: float = Field(default=0.01, ge=0.0)


class FragilityCoupling(_Strict):
    """Fragility score = centre + radius and LC-depth terms + noise, clipped to [0, 1]."""

    radius_weight: float = 0.30
    lc_depth_weight: float = 0.20
    noise_sigma: float = Field(default=0.05, ge=0.0)
    default_center: float = Field(default=0.5, ge=0.0, le=1.0)

    @property
    def spread(self) -> float:
        """Standard deviation of the uncentred score (uniform terms on [-1, 1])."""

        return float(
            (self.radius_weight**2 / 3.0 + self.lc_depth_weight**2 / 3.0 + self.noise_sigma**2)
            ** 0.5
        )


class LoadCase(_Strict):
    """Posterior LC bowing under an acute pressure rise."""

    amplitude_per_radius: float = Field(default=0.15, ge=0.0)
    width_factor: float = Field(default=0.5, gt=0.0)
    taper_mm: float = Field(default=0.3, gt=0.0)
    max_translation_mm: float = Field(default=0.01, ge=0.0)


class PhantomCoupling(_Strict):
    ranges: ParameterRanges = Field(default_factory=ParameterRanges)
    anatomy: AnatomyShape = Field(default_factory=AnatomyShape)
    fragility: FragilityCoupling = Field(default_factory=FragilityCoupling)
    load: LoadCase = Field(default_factory=LoadCase)


def parse_coupling(payload: Mapping[str, Any]) -> PhantomCoupling:
    try:
        return PhantomCoupling.model_validate(dict(payload))
    except ValidationError as exc:
        raise PhantomError(f"invalid phantom coupling: {exc}") from exc


@lru_cache(maxsize=8)
def load_coupling(relative_path: str = "phantom/coupling.json") -> PhantomCoupling:
    """Coupling constants from ``app/resources``; built-in defaults if absent."""

    try:
        payload = load_resource_json(relative_path)
    except json.JSONDecodeError as exc:
        raise PhantomError(
            f"cannot parse {relative_path}: {exc.msg} (line {exc.lineno})"
        ) from exc
    return parse_coupling(payload)


__all__ = [
    "AnatomyShape",
    "FragilityCoupling",
    "LoadCase",
    "ParameterRanges",
    "PhantomCoupling",
    "load_coupling",
    "parse_coupling",
]
