"""Exact k-nearest-neighbour queries.

Distances are squared Euclidean; ties resolve to the lower index and every
result row is ordered by (distance, index). Rows are processed in chunks so
the full N x N distance matrix never has to exist at once.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from .types import GeometryError

_CHUNK_ENTRIES = 4_000_000


def _as_points(points: np.ndarray) -> np.ndarray:
    array = np.asarray(points, dtype=np.float64)
    if array.ndim == 1:
        array = array[:, None]
    if array.ndim != 2 or array.shape[0] == 0:
        raise GeometryError(f"points must be an (N, D) array, got shape {array.shape}")
    return array


def _check_k(k: int, count: int) -> None:
    if k < 1:
        raise GeometryError(f"k must be >= 1, got {k}")
    if k >= count:
        raise GeometryError(f"k={k} needs at least {k + 1} points, got {count}")


def smallest_k(distances: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the k smallest entries per row, (distance, index) ordered."""

    rows = distances.shape[0]
    kth = np.partition(distances, k - 1, axis=1)[:, k - 1 : k]
    below = distances < kth
    tied = distances == kth
    missing = k - below.sum(axis=1, keepdims=True)
    tied &= np.cumsum(tied, axis=1) <= missing
    columns = np.nonzero(below | tied)[1].reshape(rows, k)
    picked = np.take_along_axis(distances, columns, axis=1)
    order = np.argsort(picked, axis=1, kind="stable")
    return np.take_along_axis(columns, order, axis=1)


def knn(points: np.ndarray, query_index: int, k: int) -> np.ndarray:
    """Indices of the k nearest neighbours of ``points[query_index]`` (self excluded)."""

    array = _as_points(points)
    _check_k(k, array.shape[0])
    if not 0 <= query_index < array.shape[0]:
        raise GeometryError(f"query index {query_index} out of range")
    distances = cdist(array[query_index : query_index + 1], array, "sqeuclidean")
    distances[0, query_index] = np.inf
    return smallest_k(distances, k)[0]


def knn_graph(points: np.ndarray, k: int) -> np.ndarray:
    """(N, k) neighbour table; row i equals ``knn(points, i, k)``."""

    array = _as_points(points)
    count = array.shape[0]
    _check_k(k, count)
    chunk = max(1, _CHUNK_ENTRIES // count)
    table = np.empty((count, k), dtype=np.intp)
    for start in range(0, count, chunk):
        stop = min(start + chunk, count)
        distances = cdist(array[start:stop], array, "sqeuclidean")
        distances[np.arange(stop - start), np.arange(start, stop)] = np.inf
        table[start:stop] = smallest_k(distances, k)
    return table


__all__ = ["knn", "knn_graph", "smallest_k"]
