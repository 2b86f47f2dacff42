"""Analytic load case: posterior bowing of the lamina under a pressure rise."""

from __future__ import annotations

import logging

import numpy as np

from app.pipelines.geometry import Tissue

from .coupling import LoadCase, PhantomCoupling, load_coupling
from .types import DisplacementField, PhantomParams, SegmentedVolume

logger = logging.getLogger(__name__)

LOAD_STREAM = 2


def bowing_amplitude(params: PhantomParams, load: LoadCase) -> float:
    """Peak posterior displacement (mm); zero at fragility 0, linear in it."""

    return load.amplitude_per_radius * params.fragility * params.bmo_radius_mm


def lateral_taper(rho: np.ndarray, inner_radius: float, taper_mm: float) -> np.ndarray:
    """1 inside ``inner_radius``, cos² fall-off to exactly 0 over ``taper_mm``."""

    ramp = np.clip((rho - inner_radius) / taper_mm, 0.0, 1.0)
    return np.where(ramp < 1.0, np.cos(0.5 * np.pi * ramp) ** 2, 0.0)


def canal_reach(params: PhantomParams) -> float:
    """Widest canal radius, reached at the posterior scleral surface."""

    slope = float(np.tan(np.deg2rad(params.canal_wall_angle_deg)))
    return params.bmo_radius_mm + max(0.0, params.thickness_mm["sclera"] * slope)


def generate_displacement(
    volume: SegmentedVolume,
    params: PhantomParams,
    seed: int,
    *,
    coupling: PhantomCoupling | None = None,
) -> DisplacementField:
    """Depth displacement ``A exp(-rho^2 / 2w^2)`` plus a small rigid shift.

    ``w`` scales with the BMO radius. The bowing term is tapered to zero
    before the lateral borders, so the field minus its recorded translation
    vanishes there.
    """

    load = (coupling or load_coupling()).load
    grid = volume.grid
    rng = np.random.default_rng([seed, LOAD_STREAM])
    translation = rng.uniform(-load.max_translation_mm, load.max_translation_mm, size=3)

    x, y = grid.column_coordinates()
    cx, cy = grid.canal_center_mm
    rho = np.hypot(x - cx, y - cy)
    width = load.width_factor * params.bmo_radius_mm
    amplitude = bowing_amplitude(params, load)
    bowing = (
        amplitude
        * np.exp(-(rho**2) / (2.0 * width**2))
        * lateral_taper(rho, canal_reach(params), load.taper_mm)
    )

    u = np.empty(grid.dims + (3,), dtype=np.float64)
    u[..., 0] = translation[0]
    u[..., 1] = translation[1]
    u[..., 2] = bowing[..., None] + translation[2]
    logger.debug(
        "Displacement seed=%d amplitude=%.4f mm translation=%s", seed, amplitude, translation
    )
    return DisplacementField(
        u=u,
        spacing_mm=grid.spacing_mm,
        lc_mask=volume.mask(Tissue.LC),
        translation_mm=translation,
    )


def rigid_translation_field(
    volume: SegmentedVolume, translation: np.ndarray
) -> DisplacementField:
    """A field that only shifts the whole scan."""

    shift = np.asarray(translation, dtype=np.float64).reshape(3)
    u = np.broadcast_to(shift, volume.dims + (3,)).copy()
    return DisplacementField(u, volume.spacing_mm, volume.mask(Tissue.LC), shift)


__all__ = [
    "bowing_amplitude",
    "canal_reach",
    "generate_displacement",
    "lateral_taper",
    "rigid_translation_field",
]
