"""Dense float64 arrays and the error type shared by the autodiff engine."""

from __future__ import annotations

from typing import Sequence

import numpy as np
import numpy.typing as npt

DenseArray = npt.NDArray[np.float64]


class AutodiffError(RuntimeError):
    """Raised for shape violations, unbound inputs and non-finite values."""


def as_dense(value: npt.ArrayLike, *, name: str = "array") -> DenseArray:
    """Return a C-contiguous float64 copy of ``value`` with finite entries."""

    array = np.array(value, dtype=np.float64, order="C")
    if not np.all(np.isfinite(array)):
        raise AutodiffError(f"{name} contains non-finite entries")
    return array


def check_shape(shape: Sequence[int], *, name: str = "shape") -> tuple[int, ...]:
    """Validate a shape tuple of positive integers."""

    normalized = tuple(int(size) for size in shape)
    if any(size < 1 for size in normalized):
        raise AutodiffError(f"{name} {normalized} must contain positive sizes only")
    return normalized


__all__ = ["AutodiffError", "DenseArray", "as_dense", "check_shape"]
