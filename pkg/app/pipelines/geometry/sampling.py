"""Point-cloud construction from labelled boundary surfaces."""

from __future__ import annotations

import logging
from typing import Iterable, Sequence

import numpy as np

from .thickness import local_thickness
from .types import BoundarySurface, GeometryError, OnhPointCloud, SurfaceRole, Tissue

logger = logging.getLogger(__name__)

CLOUD_POSTERIOR_TISSUES: tuple[Tissue, ...] = (Tissue.SCLERA, Tissue.LC)


def _posterior_by_tissue(
    boundaries: Sequence[BoundarySurface],
) -> dict[Tissue, BoundarySurface]:
    return {
        surface.tissue: surface
        for surface in boundaries
        if surface.role is SurfaceRole.POSTERIOR
    }


def sample_point_cloud(
    boundaries: Sequence[BoundarySurface],
    n: int,
    seed: int,
    *,
    bmo: np.ndarray | None = None,
    posterior_tissues: Iterable[Tissue] = CLOUD_POSTERIOR_TISSUES,
) -> OnhPointCloud:
    """Draw ``n`` boundary points uniformly without replacement.

    Anterior points carry the local thickness of their tissue when that
    tissue's posterior boundary is present, and 0 otherwise. Posterior
    boundaries join the cloud only for ``posterior_tissues``; the rest are
    used for thickness alone.
    """

    if not boundaries:
        raise GeometryError("cannot sample a point cloud from an empty boundary list")
    if n < 1:
        raise GeometryError(f"point count must be >= 1, got {n}")

    keep_posterior = set(posterior_tissues)
    posterior = _posterior_by_tissue(boundaries)
    positions: list[np.ndarray] = []
    thickness: list[np.ndarray] = []
    tissue: list[np.ndarray] = []
    for surface in boundaries:
        count = surface.points.shape[0]
        if surface.role is SurfaceRole.ANTERIOR:
            partner = posterior.get(surface.tissue)
            values = np.zeros(count) if partner is None else local_thickness(surface, partner)
        elif surface.tissue in keep_posterior:
            values = np.zeros(count)
        else:
            continue
        positions.append(surface.points)
        thickness.append(values)
        tissue.append(np.full(count, int(surface.tissue), dtype=np.int64))

    if not positions:
        raise GeometryError("no boundary contributes points to the cloud")
    all_positions = np.concatenate(positions)
    all_thickness = np.concatenate(thickness)
    all_tissue = np.concatenate(tissue)
    total = all_positions.shape[0]

    if n >= total:
        chosen = np.arange(total)
    else:
        rng = np.random.default_rng(seed)
        chosen = np.sort(rng.permutation(total)[:n])
    logger.debug("Sampled %d of %d boundary points (seed=%d)", chosen.size, total, seed)

    return OnhPointCloud(
        all_positions[chosen],
        all_thickness[chosen],
        all_tissue[chosen],
        canonical=False,
        bmo=np.zeros((0, 3)) if bmo is None else bmo,
    )


__all__ = ["CLOUD_POSTERIOR_TISSUES", "sample_point_cloud"]
