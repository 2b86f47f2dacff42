"""Service layer: artifact storage, cohorts on disk and experiment runs."""

from .cohort import CohortFiles, build_cohort, write_cohort
from .experiment import ExperimentResult, experiment_hash, run_experiment
from .reporting import write_report
from .storage import ArtifactStore, StorageError
from .training import critical_points, train_ae_split, train_dgcnn_split, train_rf_split

__all__ = [
    "ArtifactStore",
    "CohortFiles",
    "ExperimentResult",
    "StorageError",
    "build_cohort",
    "critical_points",
    "experiment_hash",
    "run_experiment",
    "train_ae_split",
    "train_dgcnn_split",
    "train_rf_split",
    "write_cohort",
    "write_report",
]
