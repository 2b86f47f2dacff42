"""Cross-validated comparison of the DGCNN against the two baselines.

Each phantom is reduced once to everything the three methods consume: the
strain label, a canonical point cloud, the structural parameter vector and
the central label section. Folds then train and score every enabled method
on the same partitions.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from app.pipelines.autodiff import softmax
from app.pipelines.baselines import (
    ae_classify_many,
    extract_structural_parameters,
    reconstruction_dice,
    rf_predict_many,
    train_autoencoder,
    train_classifier,
    train_random_forest,
)
from app.pipelines.dgcnn import (
    CriticalDensityMap,
    CriticalPointSet,
    DgcnnModel,
    annulus_mass_fraction,
    bmo_radius,
    critical_density_map,
    forward,
    pool_critical_points,
    pooled_bmo_radii,
    save_model,
    write_density_csv,
    write_density_ply,
)
from app.pipelines.dgcnn import train as train_dgcnn
from app.pipelines.evaluation import (
    ROC_CSV_HEADER,
    EvaluationError,
    MeanRocCurve,
    RocResult,
    SplitAssignment,
    kfold,
    mean_roc_curve,
    method_summary,
    metrics_record,
    roc_auc,
    roc_rows,
)
from app.pipelines.geometry import (
    OnhPointCloud,
    canonicalize,
    fit_bmo_plane,
    fit_cloud_plane,
    sample_point_cloud,
)
from app.pipelines.phantom import CohortSample, central_section
from app.pipelines.strain import Robustness, label_field
from app.telemetry import increment_epochs
from app.utils.hashing import config_hash
from app.utils.resources import load_resource_json
from app.views.experiment import ExperimentConfig
from app.views.records import (
    EpochRecord,
    LabelRecord,
    MethodSummary,
    MetricsRecord,
    ReferenceMetric,
    SplitRecord,
    SummaryReport,
)

from .cohort import build_cohort
from .storage import ArtifactStore

logger = logging.getLogger(__name__)

METHODS = ("dgcnn", "rf", "ae")


def reference_metrics() -> dict[str, ReferenceMetric]:
    """Clinical-cohort figures kept next to synthetic results for comparison."""

    payload = load_resource_json("reference/clinical_metrics.json")
    return {name: ReferenceMetric.model_validate(value) for name, value in payload.items()}


def experiment_hash(config: ExperimentConfig) -> str:
    """Config hash that ignores where the outputs go."""

    return config_hash(config.model_dump(mode="json", exclude={"output_dir"}))


def cloud_seed(pointcloud_seed: int, phantom_seed: int) -> int:
    return int(np.random.SeedSequence([pointcloud_seed, phantom_seed]).generate_state(1)[0])


def canonical_cloud(sample: CohortSample, n_points: int, seed: int) -> OnhPointCloud:
    """Sample the boundary surfaces and move the cloud into the BMO frame."""

    cloud = sample_point_cloud(
        sample.surfaces,
        n_points,
        cloud_seed(seed, sample.seed),
        bmo=sample.volume.bmo_points,
    )
    return canonicalize(cloud, fit_cloud_plane(cloud))


@dataclass(frozen=True)
class PreparedSample:
    id: str
    record: LabelRecord
    cloud: OnhPointCloud
    features: np.ndarray
    section: np.ndarray

    @property
    def label(self) -> int:
        return Robustness(self.record.label).class_index


def prepare_sample(sample: CohortSample, config: ExperimentConfig) -> PreparedSample:
    record = label_field(
        sample.id, sample.field, config.strain.threshold, config.strain.formula
    )
    vector = extract_structural_parameters(
        sample.volume, sample.surfaces, fit_bmo_plane(sample.volume.bmo_points)
    )
    return PreparedSample(
        id=sample.id,
        record=record,
        cloud=canonical_cloud(sample, config.pointcloud.n_points, config.pointcloud.seed),
        features=vector.values,
        section=central_section(sample.volume, config.autoencoder.raster),
    )


def _prepare_at(
    samples: Sequence[CohortSample], index: int, config: ExperimentConfig
) -> PreparedSample:
    return prepare_sample(samples[index], config)


@dataclass(frozen=True)
class PreparedCohort:
    samples: tuple[PreparedSample, ...]

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def ids(self) -> list[str]:
        return [sample.id for sample in self.samples]

    @property
    def labels(self) -> np.ndarray:
        return np.array([sample.label for sample in self.samples], dtype=np.int64)

    @property
    def records(self) -> list[LabelRecord]:
        return [sample.record for sample in self.samples]

    def clouds(self, indices: np.ndarray) -> list[OnhPointCloud]:
        return [self.samples[i].cloud for i in indices]

    def features(self, indices: np.ndarray) -> np.ndarray:
        return np.stack([self.samples[i].features for i in indices])

    def sections(self, indices: np.ndarray) -> np.ndarray:
        return np.stack([self.samples[i].section for i in indices])


def prepare_cohort(
    samples: Sequence[CohortSample], config: ExperimentConfig, jobs: int = 1
) -> PreparedCohort:
    """Reduce every phantom, in cohort order; ``jobs > 1`` uses worker processes."""

    count = len(samples)
    if jobs <= 1:
        prepared = [prepare_sample(samples[index], config) for index in range(count)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            prepared = list(
                executor.map(
                    _prepare_at, [samples] * count, range(count), [config] * count
                )
            )
    cohort = PreparedCohort(tuple(prepared))
    logger.info(
        "Prepared %d phantoms (%d fragile)", len(cohort), int(cohort.labels.sum())
    )
    return cohort


@dataclass(frozen=True)
class FoldOutcome:
    fold: int
    results: dict[str, RocResult]
    histories: dict[str, list[EpochRecord]] = field(default_factory=dict)
    dice: list[float] = field(default_factory=list)
    test_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    critical: list[CriticalPointSet] = field(default_factory=list)
    dgcnn_model: Optional[DgcnnModel] = None


def _score(fold: int, method: str, scores, labels) -> RocResult:
    try:
        return roc_auc(scores, labels)
    except EvaluationError as exc:
        raise EvaluationError(f"fold {fold}, {method}: {exc}") from exc


def run_fold(
    prepared: PreparedCohort,
    assignment: SplitAssignment,
    config: ExperimentConfig,
    methods: Sequence[str],
) -> FoldOutcome:
    """Train every method on the fold's train/val partitions, score its test partition."""

    fold = assignment.fold if assignment.fold is not None else 0
    train_idx = assignment.indices("train")
    val_idx = assignment.indices("val")
    test_idx = assignment.indices("test")
    labels = prepared.labels
    digest = experiment_hash(config)

    results: dict[str, RocResult] = {}
    histories: dict[str, list[EpochRecord]] = {}
    dice_values: list[float] = []
    critical: list[CriticalPointSet] = []
    dgcnn_model: DgcnnModel | None = None

    if "dgcnn" in methods:
        trained = train_dgcnn(
            prepared.clouds(train_idx),
            labels[train_idx],
            prepared.clouds(val_idx),
            labels[val_idx],
            config.dgcnn,
            augmentation=config.augmentation,
            config_hash=digest,
        )
        dgcnn_model = trained.model
        scores = []
        for cloud in prepared.clouds(test_idx):
            logits, critical_points = forward(cloud, dgcnn_model)
            scores.append(float(softmax(logits)[1]))
            critical.append(critical_points)
        results["dgcnn"] = _score(fold, "dgcnn", scores, labels[test_idx])
        histories["dgcnn"] = trained.history

    if "rf" in methods:
        fit_idx = np.concatenate([train_idx, val_idx])
        forest = train_random_forest(
            prepared.features(fit_idx),
            labels[fit_idx],
            n_trees=config.forest.n_trees,
            seed=config.forest.seed,
            max_features=config.forest.max_features,
            min_samples_split=config.forest.min_samples_split,
            bootstrap=config.forest.bootstrap,
        )
        scores = rf_predict_many(forest, prepared.features(test_idx))
        results["rf"] = _score(fold, "rf", scores, labels[test_idx])

    if "ae" in methods:
        autoencoder, ae_history = train_autoencoder(
            prepared.sections(train_idx),
            config.autoencoder,
            val_sections=prepared.sections(val_idx),
        )
        classified, head_history = train_classifier(
            autoencoder,
            prepared.sections(train_idx),
            labels[train_idx],
            val_sections=prepared.sections(val_idx),
            val_labels=labels[val_idx],
        )
        scores = ae_classify_many(classified, prepared.sections(test_idx))
        results["ae"] = _score(fold, "ae", scores, labels[test_idx])
        histories["ae"] = ae_history + head_history
        dice_values = reconstruction_dice(classified, prepared.sections(test_idx)).tolist()

    logger.info(
        "Fold %d: %s",
        fold,
        ", ".join(f"{name} AUC={result.auc:.3f}" for name, result in results.items()),
    )
    return FoldOutcome(
        fold=fold,
        results=results,
        histories=histories,
        dice=dice_values,
        test_indices=test_idx,
        critical=critical,
        dgcnn_model=dgcnn_model,
    )


def run_folds(
    prepared: PreparedCohort,
    assignments: Sequence[SplitAssignment],
    config: ExperimentConfig,
    methods: Sequence[str],
    jobs: int = 1,
) -> list[FoldOutcome]:
    count = len(assignments)
    if jobs <= 1:
        return [run_fold(prepared, split, config, methods) for split in assignments]
    with ProcessPoolExecutor(max_workers=min(jobs, count)) as executor:
        return list(
            executor.map(
                run_fold,
                [prepared] * count,
                assignments,
                [config] * count,
                [tuple(methods)] * count,
            )
        )


def best_fold(outcomes: Sequence[FoldOutcome], method: str = "dgcnn") -> FoldOutcome:
    """Highest test AUC; the lowest fold index wins a tie."""

    return max(outcomes, key=lambda outcome: (outcome.results[method].auc, -outcome.fold))


@dataclass(frozen=True)
class CriticalSummary:
    density: CriticalDensityMap
    bmo_radius_mm: float
    annulus_fraction: float


def summarize_critical_points(
    clouds: Sequence[OnhPointCloud],
    sets: Sequence[CriticalPointSet],
    *,
    radius_mm: float,
    annulus: tuple[float, float],
) -> CriticalSummary:
    density = critical_density_map(pool_critical_points(clouds, sets), radius_mm)
    mean_radius = float(np.mean([bmo_radius(cloud) for cloud in clouds]))
    fraction = annulus_mass_fraction(
        density,
        pooled_bmo_radii(clouds, sets),
        inner=annulus[0],
        outer=annulus[1],
    )
    return CriticalSummary(density, mean_radius, fraction)


@dataclass(frozen=True)
class ExperimentResult:
    summary: SummaryReport
    records: list[MetricsRecord]
    splits: list[SplitRecord]
    curves: dict[str, MeanRocCurve]
    critical: Optional[CriticalSummary] = None


def _dice_summary(outcomes: Sequence[FoldOutcome]) -> MethodSummary:
    values = [value for outcome in outcomes for value in outcome.dice]
    summary = method_summary(values)
    per_fold = [float(np.mean(outcome.dice)) for outcome in outcomes if outcome.dice]
    return summary.model_copy(update={"folds": per_fold})


def collect_results(
    prepared: PreparedCohort,
    assignments: Sequence[SplitAssignment],
    outcomes: Sequence[FoldOutcome],
    config: ExperimentConfig,
) -> ExperimentResult:
    """Fixed-order reduction of the fold outcomes."""

    evaluation = config.evaluation
    methods = [method for method in evaluation.methods if method in METHODS]
    ordered = sorted(outcomes, key=lambda outcome: outcome.fold)
    records = [
        metrics_record(method, outcome.fold, outcome.results[method])
        for method in methods
        for outcome in ordered
    ]
    summaries = {
        method: method_summary(outcome.results[method].auc for outcome in ordered)
        for method in methods
    }
    curves = {
        method: mean_roc_curve(
            [outcome.results[method] for outcome in ordered], evaluation.roc_grid_points
        )
        for method in methods
    }

    critical: CriticalSummary | None = None
    best: int | None = None
    if "dgcnn" in methods:
        chosen = best_fold(ordered)
        best = chosen.fold
        critical = summarize_critical_points(
            prepared.clouds(chosen.test_indices),
            chosen.critical,
            radius_mm=evaluation.density_radius_mm,
            annulus=evaluation.annulus,
        )

    summary = SummaryReport(
        methods=summaries,
        reference=reference_metrics(),
        dice=_dice_summary(ordered) if "ae" in methods else None,
        best_fold=best,
        critical_points=None if critical is None else int(critical.density.points.shape[0]),
        critical_annulus_fraction=None if critical is None else critical.annulus_fraction,
        fragile_fraction=float(prepared.labels.mean()),
        cohort_size=len(prepared),
    )
    return ExperimentResult(
        summary=summary,
        records=records,
        splits=[assignment.to_record() for assignment in assignments],
        curves=curves,
        critical=critical,
    )


def write_results(
    result: ExperimentResult,
    prepared: PreparedCohort,
    outcomes: Sequence[FoldOutcome],
    store: ArtifactStore,
    relative: str,
) -> Path:
    root = store.directory(relative)
    store.write_jsonl(Path(relative) / "labels.jsonl", prepared.records)
    store.write_jsonl(Path(relative) / "splits.jsonl", result.splits)
    store.write_jsonl(Path(relative) / "metrics.jsonl", result.records)
    store.write_json(Path(relative) / "summary.json", result.summary)
    store.write_csv(Path(relative) / "roc_mean.csv", ROC_CSV_HEADER, roc_rows(result.curves))
    for outcome in sorted(outcomes, key=lambda item: item.fold):
        for method, history in outcome.histories.items():
            store.write_jsonl(
                Path(relative) / "history" / f"{method}_fold{outcome.fold}.jsonl", history
            )
    if result.critical is not None and result.summary.best_fold is not None:
        write_density_csv(result.critical.density, store.path(relative, "critical_density.csv"))
        write_density_ply(result.critical.density, store.path(relative, "critical_density.ply"))
        chosen = next(o for o in outcomes if o.fold == result.summary.best_fold)
        if chosen.dgcnn_model is not None:
            save_model(chosen.dgcnn_model, store.path(relative, "models", "dgcnn_best"))
    return root


def run_experiment(
    config: ExperimentConfig,
    store: ArtifactStore,
    *,
    jobs: int = 1,
    relative: str = "eval",
) -> ExperimentResult:
    """Generate the cohort, cross-validate every enabled method, write the results."""

    evaluation = config.evaluation
    methods = tuple(method for method in evaluation.methods if method in METHODS)
    cohort = build_cohort(config.phantom, config.strain)
    prepared = prepare_cohort(cohort, config, jobs)
    assignments = kfold(
        prepared.ids,
        prepared.labels,
        evaluation.folds,
        evaluation.seed,
        evaluation.fractions,
    )
    outcomes = run_folds(prepared, assignments, config, methods, jobs)
    for outcome in outcomes:
        for method, history in outcome.histories.items():
            increment_epochs(method, len(history))

    result = collect_results(prepared, assignments, outcomes, config)
    store.write_manifest(
        relative, command="eval", config_hash=experiment_hash(config), seed=evaluation.seed
    )
    write_results(result, prepared, outcomes, store, relative)
    for method, entry in result.summary.methods.items():
        logger.info("%s: AUC %.3f ± %.3f", method, entry.mean, entry.std)
    return result


__all__ = [
    "CriticalSummary",
    "ExperimentResult",
    "FoldOutcome",
    "METHODS",
    "PreparedCohort",
    "PreparedSample",
    "best_fold",
    "canonical_cloud",
    "cloud_seed",
    "collect_results",
    "experiment_hash",
    "prepare_cohort",
    "prepare_sample",
    "reference_metrics",
    "run_experiment",
    "run_fold",
    "run_folds",
    "summarize_critical_points",
    "write_results",
]
