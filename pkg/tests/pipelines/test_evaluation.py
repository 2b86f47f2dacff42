import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from app.pipelines.evaluation import (
    MIN_CLASS_SIZE,
    EvaluationError,
    aggregate,
    kfold,
    mean_roc_curve,
    method_summary,
    metrics_record,
    roc_auc,
    roc_rows,
    split,
)


def _balanced(n=100):
    ids = [f"onh-{i:04d}" for i in range(n)]
    labels = np.arange(n) % 2
    return ids, labels


def _mann_whitney(scores, labels):
    positives = [s for s, y in zip(scores, labels) if y == 1]
    negatives = [s for s, y in zip(scores, labels) if y == 0]
    credit = 0.0
    for p in positives:
        for q in negatives:
            if p > q:
                credit += 1.0
            elif p == q:
                credit += 0.5
    return credit / (len(positives) * len(negatives))


def test_balanced_split_is_exactly_70_15_15():
    ids, labels = _balanced()
    assignment = split(ids, labels, seed=3)
    assert assignment.counts() == {"train": 70, "val": 15, "test": 15}
    test_labels = labels[assignment.indices("test")]
    assert abs(int(test_labels.sum()) - 7.5) <= 1


def test_split_is_a_deterministic_partition():
    ids, labels = _balanced(40)
    first = split(ids, labels, seed=11)
    assert split(ids, labels, seed=11) == first
    assert split(ids, labels, seed=12) != first
    members = [set(first.members(tag)) for tag in ("train", "val", "test")]
    assert set().union(*members) == set(ids)
    assert sum(len(group) for group in members) == len(ids)


@pytest.mark.parametrize("majority", [10, 13, 27, 60, 119])
@pytest.mark.parametrize("seed", range(5))
def test_smallest_class_reaches_every_partition(majority, seed):
    n = MIN_CLASS_SIZE + majority
    ids = [f"onh-{i:04d}" for i in range(n)]
    labels = np.array([1] * MIN_CLASS_SIZE + [0] * majority)
    assignment = split(ids, labels, seed=seed)
    for partition in ("train", "val", "test"):
        assert set(labels[assignment.indices(partition)]) == {0, 1}
    counts = assignment.counts()
    assert abs(counts["val"] - round(n * 0.15 + 1e-9)) <= 1
    assert abs(counts["test"] - round(n * 0.15 + 1e-9)) <= 1
    assert sum(counts.values()) == n


def test_split_rejects_tiny_classes():
    ids = [f"s{i}" for i in range(10)]
    labels = [0] * 8 + [1] * 2
    with pytest.raises(EvaluationError, match="class 1 has 2 samples"):
        split(ids, labels)


def test_split_rejects_duplicate_ids():
    with pytest.raises(EvaluationError, match="unique"):
        split(["a", "a", "b", "c"], [0, 1, 0, 1])


def test_kfold_tests_cover_the_dataset_once():
    ids, labels = _balanced()
    folds = kfold(ids, labels, folds=5, seed=0)
    assert len(folds) == 5
    tests = [set(fold.members("test")) for fold in folds]
    assert set().union(*tests) == set(ids)
    assert sum(len(group) for group in tests) == len(ids)
    for fold in folds:
        assert fold.counts() == {"train": 66, "val": 14, "test": 20}
        assert int(labels[fold.indices("test")].sum()) == 10
    assert kfold(ids, labels, folds=5, seed=0) == folds


def test_kfold_membership_ignores_input_order():
    ids, labels = _balanced(37)
    permutation = np.random.default_rng(4).permutation(37)
    shuffled_ids = [ids[i] for i in permutation]
    original = kfold(ids, labels, seed=9)
    shuffled = kfold(shuffled_ids, labels[permutation], seed=9)
    for a, b in zip(original, shuffled):
        for tag in ("train", "val", "test"):
            assert set(a.members(tag)) == set(b.members(tag))


def test_kfold_needs_enough_samples():
    with pytest.raises(EvaluationError, match="cannot fill 5 folds"):
        kfold(["a", "b", "c", "d"], [0, 1, 0, 1], folds=5)


def test_split_record_lists_sorted_members():
    ids, labels = _balanced(20)
    record = split(ids, labels, seed=1).to_record()
    assert record.fold is None
    assert record.train == sorted(record.train)
    assert len(record.train) + len(record.val) + len(record.test) == 20


def test_perfect_separation_and_all_ties():
    perfect = roc_auc([0.9, 0.8, 0.3, 0.2], [1, 1, 0, 0])
    assert perfect.auc == 1.0
    assert roc_auc([0.5] * 6, [0, 1, 0, 1, 1, 0]).auc == 0.5


def test_tied_tranches_get_half_credit():
    scores = [9, 8, 6, 6, 6, 6, 5, 4, 4, 2, 2]
    labels = [1, 1, 1, 0, 1, 1, 0, 0, 1, 0, 0]
    result = roc_auc(scores, labels)
    assert result.auc == pytest.approx(26 / 30, abs=1e-15)
    assert result.thresholds[0] == np.inf
    assert_array_equal(result.thresholds[1:], [9, 8, 6, 5, 4, 2])


def test_auc_matches_pair_counting():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        size = int(rng.integers(4, 51))
        scores = rng.integers(0, 6, size=size).astype(float) / 5.0
        labels = rng.integers(0, 2, size=size)
        labels[:2] = [0, 1]
        result = roc_auc(scores, labels)
        assert abs(result.auc - _mann_whitney(scores, labels)) <= 1e-12
        assert 0.0 <= result.auc <= 1.0
        assert np.all(np.diff(result.fpr) >= 0) and np.all(np.diff(result.tpr) >= 0)
        assert (result.fpr[0], result.tpr[0]) == (0.0, 0.0)
        assert (result.fpr[-1], result.tpr[-1]) == (1.0, 1.0)


def test_auc_depends_on_rank_only():
    rng = np.random.default_rng(7)
    scores = rng.normal(size=30).round(1)
    labels = rng.integers(0, 2, size=30)
    labels[:2] = [0, 1]
    auc = roc_auc(scores, labels).auc
    stretched = np.exp(3.0 * scores) + 1.0
    assert roc_auc(stretched, labels).auc == pytest.approx(auc, abs=1e-12)
    assert roc_auc(scores, 1 - labels).auc == pytest.approx(1.0 - auc, abs=1e-12)


def test_single_class_is_rejected():
    with pytest.raises(EvaluationError, match="both classes"):
        roc_auc([0.1, 0.2, 0.3], [1, 1, 1])


def test_aggregate_uses_sample_std():
    mean, std = aggregate([0.7] * 5)
    assert mean == pytest.approx(0.7)
    assert std == pytest.approx(0.0, abs=1e-12)
    mean, std = aggregate([0.6, 0.8])
    assert mean == pytest.approx(0.7)
    assert std == pytest.approx(np.sqrt(0.02))
    with pytest.raises(EvaluationError, match="at least 2"):
        aggregate([0.7])


def test_mean_roc_curve_on_a_common_grid():
    perfect = roc_auc([0.9, 0.8, 0.3, 0.2], [1, 1, 0, 0])
    chance = roc_auc([0.5] * 4, [1, 1, 0, 0])
    curve = mean_roc_curve([perfect, perfect], grid_points=11)
    assert_allclose(curve.tpr_mean, np.ones(11))
    assert_allclose(curve.tpr_std, np.zeros(11))
    mixed = mean_roc_curve([perfect, chance], grid_points=5)
    assert_allclose(mixed.fpr, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert_allclose(mixed.tpr_mean, [0.5, 0.625, 0.75, 0.875, 1.0])
    rows = roc_rows({"dgcnn": mixed})
    assert rows[0] == ("dgcnn", 0.0, 0.5, pytest.approx(np.sqrt(0.5)))


def test_metrics_records():
    result = roc_auc([0.9, 0.1, 0.6, 0.4], [1, 0, 1, 0])
    record = metrics_record("rf", 2, result)
    assert (record.method, record.fold, record.auc) == ("rf", 2, 1.0)
    assert record.curve[0].fpr == 0.0 and record.curve[-1].tpr == 1.0
    summary = method_summary([0.6, 0.8])
    assert summary.folds == [0.6, 0.8]
    assert summary.std == pytest.approx(np.sqrt(0.02))
