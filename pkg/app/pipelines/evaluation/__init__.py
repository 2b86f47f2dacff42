"""Splits, cross-validation, ROC/AUC and mean ± std aggregation."""

from .metrics import (
    ROC_CSV_HEADER,
    method_summary,
    metrics_record,
    roc_from_record,
    roc_rows,
)
from .roc import aggregate, interpolate_tpr, mean_roc_curve, roc_auc
from .splits import DEFAULT_FRACTIONS, MIN_CLASS_SIZE, kfold, split, stratified_order
from .types import (
    PARTITIONS,
    EvaluationError,
    MeanRocCurve,
    Partition,
    RocResult,
    SplitAssignment,
)

__all__ = [
    "DEFAULT_FRACTIONS",
    "EvaluationError",
    "MIN_CLASS_SIZE",
    "MeanRocCurve",
    "PARTITIONS",
    "Partition",
    "ROC_CSV_HEADER",
    "RocResult",
    "SplitAssignment",
    "aggregate",
    "interpolate_tpr",
    "kfold",
    "mean_roc_curve",
    "method_summary",
    "metrics_record",
    "roc_auc",
    "roc_from_record",
    "roc_rows",
    "split",
    "stratified_order",
]
