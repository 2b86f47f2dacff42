"""ROC curves, trapezoidal AUC and fold aggregation."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .types import EvaluationError, MeanRocCurve, RocResult


def _check_scores(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if s.size != y.size:
        raise EvaluationError(f"{s.size} scores but {y.size} labels")
    if not np.all(np.isfinite(s)):
        raise EvaluationError("scores must be finite")
    if not np.all((y == 0) | (y == 1)):
        raise EvaluationError("labels must be 0 or 1")
    y = y.astype(np.int64)
    if np.unique(y).size < 2:
        raise EvaluationError("ROC needs both classes among the labels")
    return s, y


def roc_auc(scores, labels) -> RocResult:
    """ROC over every distinct score, highest first.

    Samples sharing a score enter the curve together, so a tie contributes a
    diagonal segment and the trapezoidal area gives it half credit. The area
    is accumulated in integer counts and normalised once.
    """

    s, y = _check_scores(scores, labels)
    order = np.argsort(-s, kind="stable")
    ranked = s[order]
    hits = y[order]
    last = np.flatnonzero(np.r_[ranked[1:] != ranked[:-1], True])
    tps = np.cumsum(hits)[last]
    fps = last + 1 - tps

    positives = int(tps[-1])
    negatives = int(fps[-1])
    tp = np.r_[0, tps]
    fp = np.r_[0, fps]
    doubled = int(np.sum((fp[1:] - fp[:-1]) * (tp[1:] + tp[:-1])))
    auc = doubled / (2.0 * positives * negatives)
    return RocResult(
        thresholds=np.r_[np.inf, ranked[last]],
        fpr=fp / negatives,
        tpr=tp / positives,
        auc=auc,
    )


def interpolate_tpr(result: RocResult, grid: np.ndarray) -> np.ndarray:
    """TPR of the piecewise-linear curve at each FPR in ``grid``.

    Vertical runs at one FPR collapse to their top point, which is where the
    curve continues from.
    """

    fpr, first = np.unique(result.fpr, return_index=True)
    top = np.maximum.reduceat(result.tpr, first)
    return np.interp(grid, fpr, top)


def mean_roc_curve(
    results: Sequence[RocResult], grid_points: int = 101
) -> MeanRocCurve:
    """Mean and sample standard deviation of fold curves on a common FPR grid."""

    if len(results) < 2:
        raise EvaluationError(
            f"a mean ROC curve needs at least 2 curves, got {len(results)}"
        )
    if grid_points < 2:
        raise EvaluationError(f"grid needs at least 2 points, got {grid_points}")
    grid = np.linspace(0.0, 1.0, grid_points)
    tprs = np.stack([interpolate_tpr(result, grid) for result in results])
    return MeanRocCurve(grid, tprs.mean(axis=0), tprs.std(axis=0, ddof=1))


def aggregate(values: Sequence[float]) -> tuple[float, float]:
    """``(mean, std)`` with the ``n - 1`` denominator."""

    array = np.asarray(values, dtype=np.float64).reshape(-1)
    if array.size < 2:
        raise EvaluationError(f"aggregation needs at least 2 values, got {array.size}")
    if not np.all(np.isfinite(array)):
        raise EvaluationError("aggregated values must be finite")
    return float(array.mean()), float(array.std(ddof=1))


__all__ = ["aggregate", "interpolate_tpr", "mean_roc_curve", "roc_auc"]
