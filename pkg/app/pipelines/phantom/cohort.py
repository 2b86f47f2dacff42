"""Seeded cohorts of phantoms with a learnable geometry-fragility coupling."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from app.pipelines.geometry import BoundarySurface
from app.views.artifacts import CohortEntry, CohortIndex

from .anatomy import ANATOMY_STREAM, check_geometry, generate_phantom, layer_maps
from .coupling import ParameterRanges, PhantomCoupling, load_coupling
from .displacement import generate_displacement
from .types import (
    THICKNESS_KEYS,
    DisplacementField,
    PhantomError,
    PhantomParams,
    SegmentedVolume,
    VolumeGrid,
)

logger = logging.getLogger(__name__)

PARAMS_STREAM = 0


@dataclass(frozen=True)
class CohortSample:
    id: str
    seed: int
    params: PhantomParams
    volume: SegmentedVolume
    surfaces: list[BoundarySurface]
    field: DisplacementField


def _uniform(rng: np.random.Generator, bounds: tuple[float, float]) -> float:
    low, high = bounds
    return float(rng.uniform(low, high))


def _unit_position(value: float, bounds: tuple[float, float]) -> float:
    """Map ``value`` from its range onto [-1, 1]."""

    low, high = bounds
    if high <= low:
        return 0.0
    return 2.0 * (value - low) / (high - low) - 1.0


def draw_anatomy(rng: np.random.Generator, ranges: ParameterRanges) -> dict:
    return {
        "bmo_radius_mm": _uniform(rng, ranges.bmo_radius_mm),
        "cup_depth_mm": _uniform(rng, ranges.cup_depth_mm),
        "lc_depth_mm": _uniform(rng, ranges.lc_depth_mm),
        "lc_curvature_radius_mm": _uniform(rng, ranges.lc_curvature_radius_mm),
        "canal_wall_angle_deg": _uniform(rng, ranges.canal_wall_angle_deg),
        "thickness_mm": {
            key: _uniform(rng, ranges.thickness_mm[key]) for key in THICKNESS_KEYS
        },
    }


def fragility_score(
    anatomy: dict, center: float, noise: float, coupling: PhantomCoupling
) -> float:
    """Latent score rising with canal radius and LC depth, clipped to [0, 1]."""

    weights = coupling.fragility
    radius = _unit_position(anatomy["bmo_radius_mm"], coupling.ranges.bmo_radius_mm)
    depth = _unit_position(anatomy["lc_depth_mm"], coupling.ranges.lc_depth_mm)
    score = (
        center
        + weights.radius_weight * radius
        + weights.lc_depth_weight * depth
        + weights.noise_sigma * noise
    )
    return float(np.clip(score, 0.0, 1.0))


def reference_params(coupling: PhantomCoupling, fragility: float = 1.0) -> PhantomParams:
    """Mid-range anatomy, used to calibrate the load."""

    ranges = coupling.ranges
    return PhantomParams(
        bmo_radius_mm=ranges.midpoint("bmo_radius_mm"),
        cup_depth_mm=ranges.midpoint("cup_depth_mm"),
        lc_depth_mm=ranges.midpoint("lc_depth_mm"),
        lc_curvature_radius_mm=ranges.midpoint("lc_curvature_radius_mm"),
        thickness_mm={
            key: 0.5 * (low + high) for key, (low, high) in ranges.thickness_mm.items()
        },
        canal_wall_angle_deg=ranges.midpoint("canal_wall_angle_deg"),
        fragility=fragility,
    )


def reference_strain(
    grid: VolumeGrid,
    coupling: PhantomCoupling,
    *,
    formula: str = "von_mises",
    seed: int = 0,
) -> float:
    """Lamina strain of the mid-range phantom at fragility 1."""

    from app.pipelines.strain import lc_average_effective_strain

    params = reference_params(coupling)
    volume, _ = generate_phantom(params, seed, grid=grid, coupling=coupling)
    field = generate_displacement(volume, params, seed, coupling=coupling)
    return lc_average_effective_strain(field, formula=formula)


def calibrate_center(
    threshold: float,
    balance_target: float,
    grid: VolumeGrid,
    coupling: PhantomCoupling,
    *,
    formula: str = "von_mises",
) -> float:
    """Score centre that puts ``balance_target`` of the cohort above the threshold.

    Strain grows about linearly with the score, so the threshold is crossed
    near ``threshold / E(1)``; the centre shifts by the score spread times the
    normal quantile of the target.
    """

    full_load = reference_strain(grid, coupling, formula=formula)
    if full_load <= 0:
        raise PhantomError("reference phantom shows no lamina strain at fragility 1")
    crossing = threshold / full_load
    center = crossing + coupling.fragility.spread * float(norm.ppf(balance_target))
    logger.info(
        "Balance calibration: E(f=1)=%.4f crossing f=%.3f centre=%.3f",
        full_load,
        crossing,
        center,
    )
    return float(np.clip(center, 0.0, 1.0))


def calibrate_amplitude(
    target_strain: float,
    grid: VolumeGrid,
    coupling: PhantomCoupling | None = None,
    *,
    formula: str = "von_mises",
    tolerance: float = 1e-6,
) -> float:
    """``amplitude_per_radius`` at which the reference phantom reaches
    ``target_strain`` at f=1."""

    coupling = coupling or load_coupling()
    if target_strain <= 0:
        raise PhantomError("target strain must be positive")

    def excess(amplitude: float) -> float:
        load = coupling.load.model_copy(update={"amplitude_per_radius": amplitude})
        trial = coupling.model_copy(update={"load": load})
        return reference_strain(grid, trial, formula=formula) - target_strain

    upper = max(coupling.load.amplitude_per_radius, 1e-3)
    for _ in range(20):
        if excess(upper) > 0:
            break
        upper *= 2.0
    else:
        raise PhantomError(f"no amplitude reaches strain {target_strain}")
    return float(brentq(excess, 0.0, upper, xtol=tolerance))


class PhantomCohort(Sequence[CohortSample]):
    """Parameter draws up front; volumes and fields are built on access."""

    def __init__(
        self,
        entries: list[tuple[int, PhantomParams]],
        *,
        seed: int,
        fragility_center: float,
        grid: VolumeGrid,
        coupling: PhantomCoupling,
        bmo_points: int = 48,
    ) -> None:
        self._entries = entries
        self.seed = seed
        self.fragility_center = fragility_center
        self.grid = grid
        self.coupling = coupling
        self.bmo_points = bmo_points

    def __len__(self) -> int:
        return len(self._entries)

    def __getitem__(self, index: int) -> CohortSample:  # type: ignore[override]
        if isinstance(index, slice):
            raise TypeError("PhantomCohort does not support slicing")
        if index < 0:
            index += len(self._entries)
        if not 0 <= index < len(self._entries):
            raise IndexError(f"cohort index {index} out of range")
        seed, params = self._entries[index]
        volume, surfaces = generate_phantom(
            params, seed, grid=self.grid, coupling=self.coupling, bmo_points=self.bmo_points
        )
        field = generate_displacement(volume, params, seed, coupling=self.coupling)
        return CohortSample(sample_id(index), seed, params, volume, surfaces, field)

    def __iter__(self) -> Iterator[CohortSample]:
        for index in range(len(self)):
            yield self[index]

    @property
    def params(self) -> list[PhantomParams]:
        return [params for _, params in self._entries]

    @property
    def ids(self) -> list[str]:
        return [sample_id(index) for index in range(len(self))]

    def manifest(self) -> CohortIndex:
        return CohortIndex(
            seed=self.seed,
            fragility_center=self.fragility_center,
            entries=[
                CohortEntry(id=sample_id(index), seed=seed, params=params.to_dict())
                for index, (seed, params) in enumerate(self._entries)
            ],
        )


def sample_id(index: int) -> str:
    return f"onh-{index:04d}"


def generate_cohort(
    n: int,
    balance_target: float = 0.5,
    seed: int = 0,
    *,
    grid: VolumeGrid | None = None,
    coupling: PhantomCoupling | None = None,
    threshold: float = 0.04,
    calibrate: bool = True,
    formula: str = "von_mises",
    bmo_points: int = 48,
) -> PhantomCohort:
    """Draw ``n`` parameter sets; phantom ``i`` uses seed ``seed + i``."""

    if n < 2:
        raise PhantomError(f"a cohort needs at least 2 phantoms, got {n}")
    if not 0.0 < balance_target < 1.0:
        raise PhantomError(f"balance target must lie in (0, 1), got {balance_target}")
    grid = grid or VolumeGrid()
    coupling = coupling or load_coupling()
    if calibrate:
        center = calibrate_center(threshold, balance_target, grid, coupling, formula=formula)
    else:
        center = coupling.fragility.default_center

    entries: list[tuple[int, PhantomParams]] = []
    for index in range(n):
        phantom_seed = seed + index
        rng = np.random.default_rng([phantom_seed, PARAMS_STREAM])
        anatomy = draw_anatomy(rng, coupling.ranges)
        fragility = fragility_score(anatomy, center, float(rng.standard_normal()), coupling)
        params = PhantomParams(**anatomy, fragility=fragility)
        maps = layer_maps(
            params, grid, coupling, np.random.default_rng([phantom_seed, ANATOMY_STREAM])
        )
        check_geometry(params, grid, maps, coupling)
        entries.append((phantom_seed, params))

    logger.info(
        "Cohort drawn: n=%d seed=%d fragility centre=%.3f dims=%s",
        n,
        seed,
        center,
        grid.dims,
    )
    return PhantomCohort(
        entries,
        seed=seed,
        fragility_center=center,
        grid=grid,
        coupling=coupling,
        bmo_points=bmo_points,
    )


def cohort_from_manifest(
    manifest: CohortIndex,
    *,
    grid: VolumeGrid,
    coupling: PhantomCoupling | None = None,
    bmo_points: int = 48,
) -> PhantomCohort:
    """Rebuild a lazy cohort from its written parameter index."""

    entries = [
        (entry.seed, PhantomParams.from_dict(entry.params)) for entry in manifest.entries
    ]
    if len(entries) < 2:
        raise PhantomError("cohort manifest lists fewer than 2 phantoms")
    return PhantomCohort(
        entries,
        seed=manifest.seed,
        fragility_center=manifest.fragility_center,
        grid=grid,
        coupling=coupling or load_coupling(),
        bmo_points=bmo_points,
    )


__all__ = [
    "CohortSample",
    "PhantomCohort",
    "calibrate_amplitude",
    "calibrate_center",
    "cohort_from_manifest",
    "draw_anatomy",
    "fragility_score",
    "generate_cohort",
    "reference_params",
    "reference_strain",
    "sample_id",
]
