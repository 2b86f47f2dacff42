"""Split assignments and ROC results shared by the evaluation helpers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from app.views.records import CurvePoint, SplitRecord

Partition = Literal["train", "val", "test"]
PARTITIONS: tuple[Partition, ...] = ("train", "val", "test")


class EvaluationError(RuntimeError):
    """Raised when a split, ROC curve or aggregate cannot be computed."""


@dataclass(frozen=True)
class SplitAssignment:
    """Partition tag per sample, in the order the ids were given."""

    ids: tuple[str, ...]
    partitions: tuple[Partition, ...]
    seed: int
    fold: Optional[int] = None

    def indices(self, partition: Partition) -> np.ndarray:
        return np.array(
            [i for i, tag in enumerate(self.partitions) if tag == partition],
            dtype=np.int64,
        )

    def members(self, partition: Partition) -> list[str]:
        return [
            sample for sample, tag in zip(self.ids, self.partitions) if tag == partition
        ]

    def counts(self) -> dict[str, int]:
        return {partition: self.partitions.count(partition) for partition in PARTITIONS}

    def to_record(self) -> SplitRecord:
        return SplitRecord(
            fold=self.fold,
            seed=self.seed,
            train=sorted(self.members("train")),
            val=sorted(self.members("val")),
            test=sorted(self.members("test")),
        )


@dataclass(frozen=True)
class RocResult:
    """ROC sweep from the strictest threshold down.

    ``thresholds[i]`` is the score cut producing ``(fpr[i], tpr[i])``; the
    first entry is ``+inf`` for the (0, 0) corner.
    """

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    def curve(self) -> list[CurvePoint]:
        return [
            CurvePoint(fpr=float(x), tpr=float(y)) for x, y in zip(self.fpr, self.tpr)
        ]


@dataclass(frozen=True)
class MeanRocCurve:
    fpr: np.ndarray
    tpr_mean: np.ndarray
    tpr_std: np.ndarray


__all__ = [
    "EvaluationError",
    "MeanRocCurve",
    "PARTITIONS",
    "Partition",
    "RocResult",
    "SplitAssignment",
]
