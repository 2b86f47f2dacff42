"""Layered ONH anatomy rasterised into a label volume plus boundary surfaces.

Every boundary is a depth map over the A-scan columns. Voxels are labelled
from those maps, and a surface keeps a column's point only when the voxel
next to it carries the surface's tissue, so surfaces and labels cannot drift
apart.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from app.pipelines.geometry import BoundarySurface, SurfaceRole, Tissue

from .coupling import PhantomCoupling, load_coupling
from .types import PhantomError, PhantomParams, PhantomTruth, SegmentedVolume, VolumeGrid

logger = logging.getLogger(__name__)

ANATOMY_STREAM = 1


@dataclass(frozen=True)
class LayerMaps:
    """Boundary depths (mm below the top of the scan) per A-scan column."""

    rho: np.ndarray
    ilm: np.ndarray
    gcl_top: np.ndarray
    orl_top: np.ndarray
    bmo: float
    rpe_bottom: float
    sclera_top: float
    sclera_bottom: float
    lc_anterior: np.ndarray
    lc_posterior: np.ndarray
    bmo_radius: float
    wall_slope: float

    def canal_radius(self, depth: np.ndarray) -> np.ndarray:
        """Canal radius at each depth; it only flares below the sclera top."""

        return self.bmo_radius + np.maximum(0.0, depth - self.sclera_top) * self.wall_slope

    @property
    def max_canal_radius(self) -> float:
        span = self.sclera_bottom - self.sclera_top
        return self.bmo_radius + max(0.0, span * self.wall_slope)


def layer_maps(
    params: PhantomParams,
    grid: VolumeGrid,
    coupling: PhantomCoupling,
    rng: np.random.Generator,
) -> LayerMaps:
    shape = coupling.anatomy
    thickness = params.thickness_mm
    radius = params.bmo_radius_mm
    x, y = grid.column_coordinates()
    cx, cy = grid.canal_center_mm
    dx, dy = x - cx, y - cy
    rho = np.hypot(dx, dy)
    phi = np.arctan2(dy, dx)

    sector_angle = 0.5 * np.pi + rng.normal(0.0, 0.1)
    ripple_phase = rng.uniform(0.0, 2.0 * np.pi)

    bmo = shape.bmo_depth_fraction * grid.extent_mm[2]
    rim = np.exp(-((rho - radius) ** 2) / (2.0 * shape.rnfl_rim_width_mm**2))
    sector = 1.0 + shape.rnfl_sector_gain * np.cos(2.0 * (phi - sector_angle))
    retina = (
        thickness["rnfl"] * (1.0 + shape.rnfl_rim_gain * sector * rim)
        + thickness["gcl_ipl"]
        + thickness["orl"]
    )
    cup_width = shape.cup_width_factor * radius
    cup = params.cup_depth_mm * np.exp(-(rho**2) / (2.0 * cup_width**2))
    ripple = (
        shape.ilm_ripple_mm
        * (1.0 - np.exp(-(rho**2) / radius**2))
        * np.sin(3.0 * phi + ripple_phase)
    )
    ilm = bmo - retina + cup + ripple

    gcl = np.full_like(rho, bmo - thickness["orl"] - thickness["gcl_ipl"])
    orl = np.full_like(rho, bmo - thickness["orl"])
    rpe_bottom = bmo + thickness["rpe_bm"]
    sclera_top = rpe_bottom + thickness["choroid"]
    sclera_bottom = sclera_top + thickness["sclera"]

    curvature = params.lc_curvature_radius_mm
    sagitta = curvature - np.sqrt(np.maximum(curvature**2 - rho**2, 0.0))
    lc_anterior = bmo + params.lc_depth_mm - sagitta

    return LayerMaps(
        rho=rho,
        ilm=ilm,
        gcl_top=np.maximum(ilm, gcl),
        orl_top=np.maximum(ilm, orl),
        bmo=bmo,
        rpe_bottom=rpe_bottom,
        sclera_top=sclera_top,
        sclera_bottom=sclera_bottom,
        lc_anterior=lc_anterior,
        lc_posterior=lc_anterior + thickness["lc"],
        bmo_radius=radius,
        wall_slope=float(np.tan(np.deg2rad(params.canal_wall_angle_deg))),
    )


def check_geometry(
    params: PhantomParams, grid: VolumeGrid, maps: LayerMaps, coupling: PhantomCoupling
) -> None:
    """Reject parameter sets that cannot be rasterised on ``grid``."""

    depth_step = grid.spacing_mm[2]
    depth_extent = grid.extent_mm[2]
    for key, value in params.thickness_mm.items():
        if value < depth_step:
            raise PhantomError(
                f"{key} thickness {value:.4f} mm is thinner than one depth voxel "
                f"({depth_step:.4f} mm)"
            )
    narrowest = params.bmo_radius_mm + min(
        0.0, (maps.sclera_bottom - maps.sclera_top) * maps.wall_slope
    )
    if narrowest <= 0:
        raise PhantomError("canal wall angle closes the canal inside the sclera")
    if params.lc_curvature_radius_mm <= maps.max_canal_radius:
        raise PhantomError(
            f"LC curvature radius {params.lc_curvature_radius_mm:.3f} mm does not span the "
            f"canal (max radius {maps.max_canal_radius:.3f} mm)"
        )
    reach = maps.max_canal_radius + coupling.load.taper_mm
    if reach > grid.lateral_half_width_mm:
        raise PhantomError(
            f"canal plus load taper ({reach:.3f} mm) exceeds the lateral half width "
            f"({grid.lateral_half_width_mm:.3f} mm)"
        )
    in_canal = maps.rho < maps.max_canal_radius
    if not in_canal.any():
        raise PhantomError("BMO radius is smaller than the lateral voxel spacing")
    deepest = max(float(maps.lc_posterior[in_canal].max()), maps.sclera_bottom)
    if deepest > depth_extent - depth_step:
        raise PhantomError(
            "LC depth exceeds the volume: tissue reaches "
            f"{deepest:.3f} mm of {depth_extent:.3f} mm"
        )
    if float(maps.ilm.min()) < depth_step:
        raise PhantomError("retina does not fit above the BMO inside the scan depth")
    inside = maps.rho < params.bmo_radius_mm
    clearance = maps.lc_anterior[inside] - maps.ilm[inside]
    if clearance.size == 0:
        raise PhantomError("BMO radius is smaller than the lateral voxel spacing")
    if float(clearance.min()) <= 2.0 * depth_step:
        raise PhantomError(
            f"cup depth {params.cup_depth_mm:.3f} mm reaches the anterior LC "
            f"(clearance {float(clearance.min()):.4f} mm)"
        )


def _band(depth: np.ndarray, top, bottom) -> np.ndarray:
    return (depth >= np.asarray(top)[..., None]) & (depth < np.asarray(bottom)[..., None])


def rasterize(grid: VolumeGrid, maps: LayerMaps) -> np.ndarray:
    depth = grid.depths()[None, None, :]
    canal = maps.rho[..., None] < maps.canal_radius(depth)
    outside = ~canal
    labels = np.zeros(grid.dims, dtype=np.uint8)

    labels[canal & _band(depth, maps.ilm, maps.lc_anterior)] = Tissue.RNFL_PLT
    labels[outside & _band(depth, maps.ilm, maps.gcl_top)] = Tissue.RNFL_PLT
    labels[outside & _band(depth, maps.gcl_top, maps.orl_top)] = Tissue.GCL_IPL
    labels[outside & _band(depth, maps.orl_top, maps.bmo)] = Tissue.ORL
    labels[outside & _band(depth, maps.bmo, maps.rpe_bottom)] = Tissue.RPE_BM
    labels[outside & _band(depth, maps.rpe_bottom, maps.sclera_top)] = Tissue.CHOROID
    labels[outside & _band(depth, maps.sclera_top, maps.sclera_bottom)] = Tissue.SCLERA
    labels[canal & _band(depth, maps.lc_anterior, maps.lc_posterior)] = Tissue.LC
    return labels


def _surface(
    labels: np.ndarray,
    grid: VolumeGrid,
    tissue: Tissue,
    role: SurfaceRole,
    depth_map,
) -> BoundarySurface:
    n_b, n_a, n_p = grid.dims
    s_b, s_a, s_p = grid.spacing_mm
    depth_map = np.broadcast_to(np.asarray(depth_map, dtype=np.float64), (n_b, n_a))
    index = np.ceil(depth_map / s_p).astype(np.int64)
    if role is SurfaceRole.POSTERIOR:
        index -= 1
    inside = (index >= 0) & (index < n_p)
    b, a = np.nonzero(inside)
    p = index[b, a]
    keep = labels[b, a, p] == int(tissue)
    b, a = b[keep], a[keep]
    if b.size < 3:
        raise PhantomError(f"{tissue.name} {role.value} boundary has fewer than 3 voxels")
    points = np.column_stack([a * s_a, b * s_b, -depth_map[b, a]])
    return BoundarySurface(tissue, role, points)


def extract_surfaces(
    labels: np.ndarray, grid: VolumeGrid, maps: LayerMaps
) -> list[BoundarySurface]:
    inside = maps.rho < maps.bmo_radius
    rnfl_posterior = np.where(inside, maps.lc_anterior, maps.gcl_top)
    boundaries = [
        (Tissue.RNFL_PLT, maps.ilm, rnfl_posterior),
        (Tissue.GCL_IPL, maps.gcl_top, maps.orl_top),
        (Tissue.ORL, maps.orl_top, maps.bmo),
        (Tissue.RPE_BM, maps.bmo, maps.rpe_bottom),
        (Tissue.CHOROID, maps.rpe_bottom, maps.sclera_top),
        (Tissue.SCLERA, maps.sclera_top, maps.sclera_bottom),
        (Tissue.LC, maps.lc_anterior, maps.lc_posterior),
    ]
    surfaces: list[BoundarySurface] = []
    for tissue, anterior, posterior in boundaries:
        surfaces.append(_surface(labels, grid, tissue, SurfaceRole.ANTERIOR, anterior))
        surfaces.append(_surface(labels, grid, tissue, SurfaceRole.POSTERIOR, posterior))
    return surfaces


def bmo_rim(grid: VolumeGrid, maps: LayerMaps, count: int) -> np.ndarray:
    """``count`` landmarks on the RPE/BM opening, counterclockwise from +x."""

    if count < 3:
        raise PhantomError(f"BMO needs at least 3 points, got {count}")
    cx, cy = grid.canal_center_mm
    angles = 2.0 * np.pi * np.arange(count) / count
    return np.column_stack(
        [
            cx + maps.bmo_radius * np.cos(angles),
            cy + maps.bmo_radius * np.sin(angles),
            np.full(count, -maps.bmo),
        ]
    )


def _center_value(maps: LayerMaps, depth_map: np.ndarray) -> float:
    index = np.unravel_index(int(np.argmin(maps.rho)), maps.rho.shape)
    return float(depth_map[index])


def generate_phantom(
    params: PhantomParams,
    seed: int,
    *,
    grid: VolumeGrid | None = None,
    coupling: PhantomCoupling | None = None,
    bmo_points: int = 48,
) -> tuple[SegmentedVolume, list[BoundarySurface]]:
    """Rasterise one ONH; the same ``(params, seed)`` gives identical output."""

    grid = grid or VolumeGrid()
    coupling = coupling or load_coupling()
    rng = np.random.default_rng([seed, ANATOMY_STREAM])
    maps = layer_maps(params, grid, coupling, rng)
    check_geometry(params, grid, maps, coupling)

    labels = rasterize(grid, maps)
    surfaces = extract_surfaces(labels, grid, maps)
    truth = PhantomTruth(
        canal_center_mm=grid.canal_center_mm,
        bmo_depth_mm=maps.bmo,
        bmo_radius_mm=params.bmo_radius_mm,
        prelamina_depth_mm=_center_value(maps, maps.ilm) - maps.bmo,
        lc_depth_mm=params.lc_depth_mm,
    )
    volume = SegmentedVolume(labels, grid, bmo_rim(grid, maps, bmo_points), truth)
    logger.debug(
        "Generated phantom seed=%d dims=%s r_bmo=%.3f f=%.3f",
        seed,
        grid.dims,
        params.bmo_radius_mm,
        params.fragility,
    )
    return volume, surfaces


__all__ = [
    "LayerMaps",
    "check_geometry",
    "extract_surfaces",
    "generate_phantom",
    "layer_maps",
    "rasterize",
]
