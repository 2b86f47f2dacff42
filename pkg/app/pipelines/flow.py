"""High-level orchestration map for the robustness experiment.

``app/services/experiment.py`` holds the code that ties the stages together;
this module documents the canonical execution order so the codebase is easy
to navigate:

1. ``phantom`` builds the cohort of segmented volumes and displacement fields.
2. ``strain`` labels every phantom robust or fragile from its lamina strain.
3. ``geometry`` samples boundary surfaces into canonical point clouds.
4. ``baselines`` measures structural parameters and extracts central sections.
5. ``evaluation`` assigns stratified cross-validation folds.
6. ``dgcnn`` and ``baselines`` train each enabled method per fold.
7. ``evaluation`` scores the test partitions and aggregates mean ± std.
8. ``dgcnn`` pools critical points of the best fold into a density map.

The single-step CLI commands run the same stages one at a time against
files on disk.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List


@dataclass(frozen=True)
class PipelineStage:
    """Human-readable description of one stage in the experiment."""

    order: int
    name: str
    module: str
    summary: str
    command: str


class ExperimentPipeline:
    """Utility wrapper documenting the ``eval`` flow."""

    _STAGES: List[PipelineStage] = [
        PipelineStage(
            1,
            "Phantom Cohort",
            "app.pipelines.phantom",
            "Draw anatomy and fragility per phantom; rasterize tissues and displacement.",
            "phantom generate",
        ),
        PipelineStage(
            2,
            "Strain Labels",
            "app.pipelines.strain",
            "Green-Lagrange strain in the lamina; effective strain against the threshold.",
            "label strain",
        ),
        PipelineStage(
            3,
            "Point Clouds",
            "app.pipelines.geometry",
            "Sample the boundary surfaces and move each cloud into the BMO frame.",
            "extract pointcloud",
        ),
        PipelineStage(
            4,
            "Structural Parameters",
            "app.pipelines.baselines.structural",
            "Prelamina and lamina depths, thickness per octant, BMO area, shape index.",
            "extract params",
        ),
        PipelineStage(
            5,
            "Cross-validation Folds",
            "app.pipelines.evaluation.splits",
            "Stratified five-fold assignment; each remainder re-split into train and val.",
            "eval",
        ),
        PipelineStage(
            6,
            "Training",
            "app.pipelines.dgcnn.training",
            "DGCNN, random forest and section autoencoder trained per fold.",
            "train",
        ),
        PipelineStage(
            7,
            "Scoring",
            "app.pipelines.evaluation.roc",
            "Test-partition ROC curves and AUCs, aggregated as mean ± std.",
            "report",
        ),
        PipelineStage(
            8,
            "Critical Points",
            "app.pipelines.dgcnn.critical",
            "Pool the max-pooling winners of the best fold into a density map.",
            "critical-points",
        ),
    ]

    @classmethod
    def describe(cls) -> Iterable[PipelineStage]:
        """Expose the ordered list of stages for debugging and documentation."""

        return tuple(cls._STAGES)

    @classmethod
    def render(cls) -> str:
        width = max(len(stage.name) for stage in cls._STAGES)
        return "\n".join(
            f"  {stage.order}. {stage.name.ljust(width)}  ({stage.command})"
            for stage in cls._STAGES
        )


__all__ = ["ExperimentPipeline", "PipelineStage"]
