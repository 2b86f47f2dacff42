"""Dice overlap between tissue label maps."""

from __future__ import annotations

import numpy as np

from .types import BaselineError


def dice_per_class(a, b, *, background: int | None = None) -> dict[int, float]:
    """``2|A_c & B_c| / (|A_c| + |B_c|)`` for every class present in either map."""

    first = np.asarray(a)
    second = np.asarray(b)
    if first.shape != second.shape:
        raise BaselineError(f"label maps differ in shape: {first.shape} vs {second.shape}")
    scores: dict[int, float] = {}
    for value in np.union1d(np.unique(first), np.unique(second)):
        if background is not None and value == background:
            continue
        in_first = first == value
        in_second = second == value
        overlap = np.count_nonzero(in_first & in_second)
        total = np.count_nonzero(in_first) + np.count_nonzero(in_second)
        scores[int(value)] = 2.0 * overlap / total
    return scores


def dice(a, b, *, background: int | None = None) -> float:
    """Macro-averaged Dice; classes absent from both maps are skipped."""

    scores = dice_per_class(a, b, background=background)
    if not scores:
        raise BaselineError("no classes to compare")
    return float(np.mean(list(scores.values())))


__all__ = ["dice", "dice_per_class"]
