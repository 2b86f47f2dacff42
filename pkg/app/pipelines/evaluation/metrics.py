"""Metrics records written by ``eval`` and read back by ``report``."""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from app.views.records import MethodSummary, MetricsRecord

from .roc import aggregate
from .types import MeanRocCurve, RocResult

ROC_CSV_HEADER = ("method", "fpr", "tpr_mean", "tpr_std")


def metrics_record(method: str, fold: int | None, result: RocResult) -> MetricsRecord:
    return MetricsRecord(method=method, fold=fold, auc=result.auc, curve=result.curve())


def roc_from_record(record: MetricsRecord) -> RocResult:
    """Curve read back from a metrics line; thresholds are not stored."""

    fpr = np.array([point.fpr for point in record.curve], dtype=np.float64)
    tpr = np.array([point.tpr for point in record.curve], dtype=np.float64)
    return RocResult(np.full(fpr.size, np.nan), fpr, tpr, record.auc)


def method_summary(aucs: Iterable[float]) -> MethodSummary:
    values = [float(value) for value in aucs]
    mean, std = aggregate(values)
    return MethodSummary(mean=mean, std=std, folds=values)


def roc_rows(
    curves: Mapping[str, MeanRocCurve],
) -> list[tuple[str, float, float, float]]:
    """Rows of the mean-ROC CSV, methods in the given order."""

    rows = []
    for method, curve in curves.items():
        for fpr, mean, std in zip(curve.fpr, curve.tpr_mean, curve.tpr_std):
            rows.append((method, float(fpr), float(mean), float(std)))
    return rows


__all__ = [
    "ROC_CSV_HEADER",
    "method_summary",
    "metrics_record",
    "roc_from_record",
    "roc_rows",
]
