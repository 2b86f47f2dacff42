"""Central B-scan cross-sections, resampled to a fixed raster."""

from __future__ import annotations

import numpy as np

from .types import PhantomError, SegmentedVolume


def _nearest(count: int, size: int) -> np.ndarray:
    return np.minimum(((np.arange(size) + 0.5) * count / size).astype(np.int64), count - 1)


def central_section(volume: SegmentedVolume, raster: tuple[int, int]) -> np.ndarray:
    """Labels of the middle B-scan as ``(depth rows, A-scan columns)``.

    Nearest-neighbour resampling keeps every value a valid tissue label.
    """

    rows, cols = raster
    if rows < 1 or cols < 1:
        raise PhantomError(f"section raster must be positive, got {raster}")
    n_b, n_a, n_p = volume.dims
    scan = volume.labels[n_b // 2].T
    return np.ascontiguousarray(scan[np.ix_(_nearest(n_p, rows), _nearest(n_a, cols))])


__all__ = ["central_section"]
