"""Pydantic schemas used as views: configs, sidecars, manifests and records."""

from .artifacts import (
    ArrayEntry,
    CohortEntry,
    CohortIndex,
    DisplacementSidecar,
    PointCloudSidecar,
    RunManifest,
    VolumeSidecar,
    WeightManifest,
)
from .common import ErrorResponse
from .experiment import (
    ConfigError,
    ExperimentConfig,
    experiment_schema,
    load_experiment_config,
    parse_experiment_config,
)
from .records import (
    CurvePoint,
    EpochRecord,
    LabelRecord,
    MethodSummary,
    MetricsRecord,
    ReferenceMetric,
    SummaryReport,
)

__all__ = [
    "ArrayEntry",
    "CohortEntry",
    "CohortIndex",
    "ConfigError",
    "CurvePoint",
    "DisplacementSidecar",
    "EpochRecord",
    "ErrorResponse",
    "ExperimentConfig",
    "LabelRecord",
    "MethodSummary",
    "MetricsRecord",
    "PointCloudSidecar",
    "ReferenceMetric",
    "RunManifest",
    "SummaryReport",
    "VolumeSidecar",
    "WeightManifest",
    "experiment_schema",
    "load_experiment_config",
    "parse_experiment_config",
]
