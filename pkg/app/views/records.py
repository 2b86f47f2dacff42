"""Pydantic schemas for JSON-lines records and run summaries."""

from typing import Literal, Optional

from pydantic import BaseModel, Field


class LabelRecord(BaseModel):
    """One strain label line of ``labels.jsonl``."""

    id: str
    e_eff: float = Field(..., ge=0.0)
    threshold: float
    label: Literal["robust", "fragile"]


class CurvePoint(BaseModel):
    fpr: float
    tpr: float


class MetricsRecord(BaseModel):
    """Per-fold test performance of one method."""

    method: str
    fold: Optional[int] = None
    auc: float
    curve: list[CurvePoint]


class EpochRecord(BaseModel):
    epoch: int
    train_loss: float
    val_loss: Optional[float] = None
    val_accuracy: Optional[float] = None


class MethodSummary(BaseModel):
    mean: float
    std: float
    folds: list[float]


class ReferenceMetric(BaseModel):
    """Clinical-cohort figure recorded for comparison; never recomputed here."""

    mean: float
    std: float


class SummaryReport(BaseModel):
    """Cross-validated results of an ``eval`` run."""

    methods: dict[str, MethodSummary]
    reference: dict[str, ReferenceMetric] = Field(default_factory=dict)
    dice: Optional[MethodSummary] = None
    best_fold: Optional[int] = None
    critical_points: Optional[int] = None
    critical_annulus_fraction: Optional[float] = None
    fragile_fraction: float
    cohort_size: int


class SplitRecord(BaseModel):
    """Partition membership of one split; ``fold`` is None for a single split."""

    fold: Optional[int] = None
    seed: int
    train: list[str]
    val: list[str]
    test: list[str]


class CriticalReport(BaseModel):
    """Pooled critical-point density of one trained DGCNN."""

    clouds: int
    critical_points: int
    density_radius_mm: float
    bmo_radius_mm: float
    annulus: tuple[float, float]
    annulus_fraction: float
