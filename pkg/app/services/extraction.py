"""Per-phantom exports: strain labels, point clouds and structural parameters."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from app.config.settings import PointCloudConfig, StrainConfig
from app.pipelines.baselines import extract_structural_parameters, write_features_csv
from app.pipelines.geometry import fit_bmo_plane, write_cloud_ply, write_point_cloud_csv
from app.pipelines.strain import Robustness, label_field
from app.views.records import LabelRecord

from .cohort import CohortFiles
from .experiment import canonical_cloud, cloud_seed
from .storage import ArtifactStore, StorageError, read_jsonl

logger = logging.getLogger(__name__)

LABELS_FILE = "labels.jsonl"
FEATURES_FILE = "features.csv"


def label_cohort(
    files: CohortFiles,
    strain: StrainConfig,
    store: ArtifactStore,
    relative: str = "labels",
) -> list[LabelRecord]:
    records = [
        label_field(sample.id, sample.field, strain.threshold, strain.formula)
        for sample in files
    ]
    store.write_jsonl(Path(relative) / LABELS_FILE, records)
    fragile = sum(record.label == Robustness.FRAGILE.value for record in records)
    logger.info("Labelled %d phantoms: %d fragile", len(records), fragile)
    return records


def read_labels(path: Path) -> tuple[list[str], np.ndarray]:
    """Ids and class indices (robust 0, fragile 1) in file order."""

    records = read_jsonl(path, LabelRecord)
    if not records:
        raise StorageError(f"{path}: no labels")
    ids = [record.id for record in records]
    labels = np.array([Robustness(record.label).class_index for record in records])
    return ids, labels


def extract_pointclouds(
    files: CohortFiles,
    config: PointCloudConfig,
    store: ArtifactStore,
    relative: str = "pointclouds",
) -> list[Path]:
    """One canonical cloud per phantom as ``<id>.csv`` (+ sidecar, optional PLY)."""

    written = []
    store.directory(relative)
    for sample in files:
        cloud = canonical_cloud(sample, config.n_points, config.seed)
        path = write_point_cloud_csv(
            cloud,
            store.path(relative, f"{sample.id}.csv"),
            seed=cloud_seed(config.seed, sample.seed),
        )
        if config.write_ply:
            write_cloud_ply(cloud, store.path(relative, f"{sample.id}.ply"))
        written.append(path)
    logger.info("Wrote %d point clouds of %d points", len(written), config.n_points)
    return written


def extract_params(
    files: CohortFiles, store: ArtifactStore, relative: str = "params"
) -> Path:
    rows = []
    for sample in files:
        plane = fit_bmo_plane(sample.volume.bmo_points)
        rows.append(
            (sample.id, extract_structural_parameters(sample.volume, sample.surfaces, plane))
        )
    store.directory(relative)
    return write_features_csv(rows, store.path(relative, FEATURES_FILE))


__all__ = [
    "FEATURES_FILE",
    "LABELS_FILE",
    "extract_params",
    "extract_pointclouds",
    "label_cohort",
    "read_labels",
]
