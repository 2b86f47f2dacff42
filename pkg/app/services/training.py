"""Single-split training of each method, and critical points of a saved DGCNN."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

import numpy as np

from app.config.settings import EvaluationConfig
from app.pipelines.baselines import (
    ae_classify_many,
    read_features_csv,
    reconstruction_dice,
    rf_predict_many,
    save_autoencoder,
    save_forest,
    train_autoencoder,
    train_classifier,
    train_random_forest,
)
from app.pipelines.dgcnn import (
    forward,
    load_model,
    predict_set,
    save_model,
    write_density_csv,
    write_density_ply,
)
from app.pipelines.dgcnn import train as train_dgcnn
from app.pipelines.evaluation import (
    SplitAssignment,
    method_summary,
    metrics_record,
    roc_auc,
    split,
)
from app.pipelines.geometry import OnhPointCloud, read_point_cloud_csv
from app.pipelines.phantom import central_section
from app.telemetry import increment_epochs
from app.views.experiment import ExperimentConfig
from app.views.records import CriticalReport, EpochRecord, MetricsRecord

from .cohort import CohortFiles
from .experiment import experiment_hash, summarize_critical_points
from .extraction import read_labels
from .storage import ArtifactStore, StorageError

logger = logging.getLogger(__name__)


def _write_run(
    store: ArtifactStore,
    relative: str,
    *,
    command: str,
    config: ExperimentConfig,
    seed: int,
    assignment: SplitAssignment,
    record: MetricsRecord,
    history: Sequence[EpochRecord] = (),
) -> None:
    store.write_manifest(
        relative, command=command, config_hash=experiment_hash(config), seed=seed
    )
    store.write_json(Path(relative) / "split.json", assignment.to_record())
    store.write_jsonl(Path(relative) / "metrics.jsonl", [record])
    if history:
        store.write_jsonl(Path(relative) / "history.jsonl", history)
    logger.info("%s: test AUC %.3f", command, record.auc)


def _split(ids: Sequence[str], labels: np.ndarray, config: ExperimentConfig):
    evaluation = config.evaluation
    return split(ids, labels, evaluation.fractions, evaluation.seed)


def read_clouds(directory: Path, ids: Sequence[str]) -> list[OnhPointCloud]:
    missing = [i for i in ids if not (directory / f"{i}.csv").exists()]
    if missing:
        raise StorageError(
            f"{directory}: no point cloud for {', '.join(missing[:5])}"
        )
    return [read_point_cloud_csv(directory / f"{sample}.csv") for sample in ids]


def train_dgcnn_split(
    clouds_dir: Path,
    labels_path: Path,
    config: ExperimentConfig,
    store: ArtifactStore,
    relative: str = "models/dgcnn",
) -> MetricsRecord:
    ids, labels = read_labels(labels_path)
    clouds = read_clouds(clouds_dir, ids)
    assignment = _split(ids, labels, config)
    train_idx, val_idx, test_idx = (
        assignment.indices(tag) for tag in ("train", "val", "test")
    )
    result = train_dgcnn(
        [clouds[i] for i in train_idx],
        labels[train_idx],
        [clouds[i] for i in val_idx],
        labels[val_idx],
        config.dgcnn,
        augmentation=config.augmentation,
        config_hash=experiment_hash(config),
    )
    increment_epochs("dgcnn", len(result.history))
    store.directory(relative)
    save_model(result.model, store.path(relative, "model"))
    scores = predict_set(result.model, [clouds[i] for i in test_idx])
    record = metrics_record("dgcnn", None, roc_auc(scores, labels[test_idx]))
    _write_run(
        store,
        relative,
        command="train dgcnn",
        config=config,
        seed=config.dgcnn.seed,
        assignment=assignment,
        record=record,
        history=result.history,
    )
    return record


def _aligned_features(path: Path, ids: Sequence[str]) -> np.ndarray:
    feature_ids, table = read_features_csv(path)
    rows = {sample: index for index, sample in enumerate(feature_ids)}
    missing = [sample for sample in ids if sample not in rows]
    if missing:
        raise StorageError(f"{path}: no features for {', '.join(missing[:5])}")
    return table[[rows[sample] for sample in ids]]


def train_rf_split(
    features_path: Path,
    labels_path: Path,
    config: ExperimentConfig,
    store: ArtifactStore,
    relative: str = "models/rf",
) -> MetricsRecord:
    ids, labels = read_labels(labels_path)
    features = _aligned_features(features_path, ids)
    assignment = _split(ids, labels, config)
    fit_idx = np.concatenate([assignment.indices("train"), assignment.indices("val")])
    test_idx = assignment.indices("test")
    forest = train_random_forest(
        features[fit_idx],
        labels[fit_idx],
        n_trees=config.forest.n_trees,
        seed=config.forest.seed,
        max_features=config.forest.max_features,
        min_samples_split=config.forest.min_samples_split,
        bootstrap=config.forest.bootstrap,
    )
    store.directory(relative)
    save_forest(
        forest, store.path(relative, "forest.json"), config_hash=experiment_hash(config)
    )
    scores = rf_predict_many(forest, features[test_idx])
    record = metrics_record("rf", None, roc_auc(scores, labels[test_idx]))
    _write_run(
        store,
        relative,
        command="train rf",
        config=config,
        seed=config.forest.seed,
        assignment=assignment,
        record=record,
    )
    return record


def train_ae_split(
    files: CohortFiles,
    labels_path: Path,
    config: ExperimentConfig,
    store: ArtifactStore,
    relative: str = "models/ae",
) -> MetricsRecord:
    ids, labels = read_labels(labels_path)
    raster = config.autoencoder.raster
    sections = np.stack(
        [central_section(files.sample(i).volume, raster) for i in ids]
    )
    assignment = _split(ids, labels, config)
    train_idx, val_idx, test_idx = (
        assignment.indices(tag) for tag in ("train", "val", "test")
    )
    autoencoder, ae_history = train_autoencoder(
        sections[train_idx], config.autoencoder, val_sections=sections[val_idx]
    )
    model, head_history = train_classifier(
        autoencoder,
        sections[train_idx],
        labels[train_idx],
        val_sections=sections[val_idx],
        val_labels=labels[val_idx],
    )
    increment_epochs("ae", len(ae_history) + len(head_history))
    store.directory(relative)
    save_autoencoder(
        model, store.path(relative, "model"), config_hash=experiment_hash(config)
    )
    scores = ae_classify_many(model, sections[test_idx])
    record = metrics_record("ae", None, roc_auc(scores, labels[test_idx]))
    dice_values = reconstruction_dice(model, sections[test_idx])
    if dice_values.size >= 2:
        store.write_json(Path(relative) / "dice.json", method_summary(dice_values))
    _write_run(
        store,
        relative,
        command="train ae",
        config=config,
        seed=config.autoencoder.seed,
        assignment=assignment,
        record=record,
        history=ae_history + head_history,
    )
    return record


def critical_points(
    model_stem: Path,
    clouds_dir: Path,
    evaluation: EvaluationConfig,
    store: ArtifactStore,
    *,
    ids: Sequence[str] | None = None,
    relative: str = "critical",
) -> CriticalReport:
    """Pool the critical points of a saved DGCNN over a directory of clouds."""

    model = load_model(model_stem)
    if ids is None:
        ids = sorted(path.stem for path in clouds_dir.glob("*.csv"))
    if not ids:
        raise StorageError(f"{clouds_dir}: no point clouds")
    clouds = read_clouds(clouds_dir, ids)
    sets = [forward(cloud, model)[1] for cloud in clouds]
    summary = summarize_critical_points(
        clouds,
        sets,
        radius_mm=evaluation.density_radius_mm,
        annulus=evaluation.annulus,
    )
    store.directory(relative)
    write_density_csv(summary.density, store.path(relative, "critical_density.csv"))
    write_density_ply(summary.density, store.path(relative, "critical_density.ply"))
    report = CriticalReport(
        clouds=len(clouds),
        critical_points=int(summary.density.points.shape[0]),
        density_radius_mm=summary.density.radius_mm,
        bmo_radius_mm=summary.bmo_radius_mm,
        annulus=evaluation.annulus,
        annulus_fraction=summary.annulus_fraction,
    )
    store.write_json(Path(relative) / "critical.json", report)
    logger.info(
        "%d critical points from %d clouds; %.1f%% of density mass in the annulus",
        report.critical_points,
        report.clouds,
        100.0 * report.annulus_fraction,
    )
    return report


__all__ = [
    "critical_points",
    "read_clouds",
    "train_ae_split",
    "train_dgcnn_split",
    "train_rf_split",
]
