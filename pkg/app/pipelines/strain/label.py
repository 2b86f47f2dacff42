"""Robust / fragile labels from the lamina strain."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

from app.pipelines.phantom.types import DisplacementField
from app.views.records import LabelRecord

from .tensors import StrainError, lc_average_effective_strain

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.04


class Robustness(str, Enum):
    ROBUST = "robust"
    FRAGILE = "fragile"

    @property
    def class_index(self) -> int:
        """0 for robust, 1 for fragile; the classifiers' target coding."""

        return 1 if self is Robustness.FRAGILE else 0


@dataclass(frozen=True)
class RobustnessLabel:
    label: Robustness
    e_eff: float
    threshold: float


def label(e_eff: float, threshold: float = DEFAULT_THRESHOLD) -> RobustnessLabel:
    """Fragile iff ``e_eff > threshold``; a value exactly at the threshold is robust."""

    if not math.isfinite(e_eff) or e_eff < 0:
        raise StrainError(f"effective strain must be a finite value >= 0, got {e_eff}")
    if not math.isfinite(threshold) or threshold <= 0:
        raise StrainError(f"threshold must be positive, got {threshold}")
    verdict = Robustness.FRAGILE if e_eff > threshold else Robustness.ROBUST
    return RobustnessLabel(verdict, float(e_eff), float(threshold))


def label_record(sample_id: str, result: RobustnessLabel) -> LabelRecord:
    return LabelRecord(
        id=sample_id,
        e_eff=result.e_eff,
        threshold=result.threshold,
        label=result.label.value,
    )


def label_field(
    sample_id: str,
    field: DisplacementField,
    threshold: float = DEFAULT_THRESHOLD,
    formula: str = "von_mises",
) -> LabelRecord:
    """Strain, label and JSON record for one displacement field."""

    e_eff = lc_average_effective_strain(field, formula=formula)
    record = label_record(sample_id, label(e_eff, threshold))
    logger.debug("%s: E_eff=%.5f -> %s", sample_id, e_eff, record.label)
    return record


__all__ = [
    "DEFAULT_THRESHOLD",
    "Robustness",
    "RobustnessLabel",
    "label",
    "label_field",
    "label_record",
]
