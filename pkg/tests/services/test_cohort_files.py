import filecmp

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from app.config.settings import PhantomConfig, PointCloudConfig, StrainConfig
from app.pipelines.baselines import FEATURE_HEADER, read_features_csv
from app.pipelines.geometry import read_point_cloud_csv
from app.pipelines.strain import Robustness
from app.services.cohort import CohortFiles, build_cohort, write_cohort
from app.services.extraction import (
    extract_params,
    extract_pointclouds,
    label_cohort,
    read_labels,
)
from app.services.storage import ArtifactStore, StorageError


@pytest.fixture(scope="module")
def cohort():
    phantom = PhantomConfig(cohort_size=4, seed=3, calibrate_balance=False)
    return build_cohort(phantom, StrainConfig())


@pytest.fixture(scope="module")
def store(tmp_path_factory):
    return ArtifactStore(tmp_path_factory.mktemp("out"))


@pytest.fixture(scope="module")
def files(cohort, store):
    write_cohort(cohort, store, "phantoms")
    return CohortFiles(store.root / "phantoms")


def test_cohort_files_follow_generation_order(cohort, files):
    assert len(files) == 4
    assert files.ids == [sample.id for sample in cohort]
    assert files.index.seed == 3


def test_phantom_read_back_matches_the_generator(cohort, files):
    written = files.sample(cohort[1].id)
    assert_array_equal(written.volume.labels, cohort[1].volume.labels)
    assert written.seed == cohort[1].seed
    assert len(written.surfaces) == len(cohort[1].surfaces)


def test_unknown_phantom_is_a_storage_error(files):
    with pytest.raises(StorageError, match="no phantom onh-9999"):
        files.sample("onh-9999")


def test_labels_follow_the_cohort(files, store):
    records = label_cohort(files, StrainConfig(), store, "labels")
    ids, labels = read_labels(store.root / "labels" / "labels.jsonl")
    assert ids == files.ids
    expected = [Robustness(record.label).class_index for record in records]
    assert_array_equal(labels, expected)
    assert all(record.threshold == 0.04 for record in records)


def test_point_clouds_are_canonical_and_reproducible(files, store):
    config = PointCloudConfig(n_points=64, seed=5)
    first = extract_pointclouds(files, config, store, "clouds_a")
    second = extract_pointclouds(files, config, store, "clouds_b")
    assert [path.name for path in first] == [f"{i}.csv" for i in files.ids]
    for a, b in zip(first, second):
        assert filecmp.cmp(a, b, shallow=False)
    cloud = read_point_cloud_csv(first[0])
    assert cloud.n_points == 64
    assert cloud.canonical


def test_structural_parameters_table(files, store):
    path = extract_params(files, store, "params")
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header == ",".join(FEATURE_HEADER)
    ids, table = read_features_csv(path)
    assert ids == files.ids
    assert table.shape == (4, len(FEATURE_HEADER) - 1)
    assert np.all(np.isfinite(table))
