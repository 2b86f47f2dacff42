"""Stratified train/val/test splits and k-fold cross-validation."""

from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np

from .types import EvaluationError, Partition, SplitAssignment

logger = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.70, 0.15, 0.15)
MIN_CLASS_SIZE = 3


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5 + 1e-9))


def _check_dataset(ids: Sequence[str], labels) -> tuple[list[str], np.ndarray]:
    names = [str(sample) for sample in ids]
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if y.size != len(names):
        raise EvaluationError(f"{len(names)} ids but {y.size} labels")
    if len(set(names)) != len(names):
        raise EvaluationError("sample ids must be unique")
    return names, y


def _check_fractions(fractions: Sequence[float]) -> tuple[float, float, float]:
    if len(fractions) != 3:
        raise EvaluationError(
            f"expected 3 fractions (train, val, test), got {fractions}"
        )
    train, val, test = (float(part) for part in fractions)
    if min(train, val, test) <= 0 or abs(train + val + test - 1.0) > 1e-9:
        raise EvaluationError(
            f"fractions must be positive and sum to 1, got {fractions}"
        )
    return train, val, test


def _class_members(names: list[str], y: np.ndarray, seed: int) -> list[np.ndarray]:
    """Per-class indices, sorted by id and then shuffled with one seeded stream."""

    rng = np.random.default_rng(seed)
    groups: list[np.ndarray] = []
    for value in np.unique(y):
        members = np.flatnonzero(y == value)
        members = members[np.argsort([names[i] for i in members], kind="stable")]
        groups.append(members[rng.permutation(members.size)])
    return groups


def stratified_order(ids: Sequence[str], labels, seed: int) -> np.ndarray:
    """Indices interleaving every class evenly after a seeded shuffle.

    Members of a class are sorted by id before shuffling, so the result as a
    sequence of ids does not depend on the order the samples were given in.
    Prefixes of the order hold each class in proportion to its size.
    """

    names, y = _check_dataset(ids, labels)
    groups = _class_members(names, y, seed)
    if not groups:
        return np.zeros(0, dtype=np.int64)
    positions = [(np.arange(group.size) + 0.5) / group.size for group in groups]
    classes = [np.full(group.size, rank) for rank, group in enumerate(groups)]
    order = np.concatenate(groups)
    rank = np.lexsort((np.concatenate(classes), np.concatenate(positions)))
    return order[rank]


def _reconcile(counts: np.ndarray, train: np.ndarray, target: int) -> None:
    """Move samples between one partition and train until its total is ``target``.

    Every class keeps at least one member in the partition and in train, so
    the total can stay above ``target`` when there are more classes than
    ``target`` allows.
    """

    while counts.sum() > target:
        spare = np.flatnonzero(counts > 1)
        if spare.size == 0:
            break
        chosen = spare[np.argmax(counts[spare])]
        counts[chosen] -= 1
        train[chosen] += 1
    while counts.sum() < target:
        spare = np.flatnonzero(train > 1)
        if spare.size == 0:
            break
        chosen = spare[np.argmax(train[spare])]
        counts[chosen] += 1
        train[chosen] -= 1


def split(
    ids: Sequence[str],
    labels,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    seed: int = 0,
) -> SplitAssignment:
    """Stratified train/val/test split.

    Each class gets its rounded share of every partition, with at least one
    member in each, and the totals are then brought to the rounded fractions
    of the whole dataset.
    """

    names, y = _check_dataset(ids, labels)
    _, val_share, test_share = _check_fractions(fractions)
    if len(names) < 3:
        raise EvaluationError(f"a split needs at least 3 samples, got {len(names)}")
    values, sizes = np.unique(y, return_counts=True)
    for value, size in zip(values, sizes):
        if size < MIN_CLASS_SIZE:
            raise EvaluationError(
                f"class {value} has {size} samples; stratifying needs at least "
                f"{MIN_CLASS_SIZE}"
            )

    n = len(names)
    n_test = max(1, _round_half_up(n * test_share))
    n_val = max(1, _round_half_up(n * val_share))
    test = np.array([max(1, _round_half_up(size * test_share)) for size in sizes])
    val = np.array([max(1, _round_half_up(size * val_share)) for size in sizes])
    train = sizes - val - test
    for short in np.flatnonzero(train < 1):
        if test[short] >= val[short]:
            test[short] -= 1
        else:
            val[short] -= 1
        train[short] += 1
    _reconcile(test, train, n_test)
    _reconcile(val, train, n_val)

    tags: list[Partition] = ["train"] * n
    groups = _class_members(names, y, seed)
    for members, n_train_c, n_val_c in zip(groups, train, val):
        for index in members[n_train_c : n_train_c + n_val_c]:
            tags[index] = "val"
        for index in members[n_train_c + n_val_c :]:
            tags[index] = "test"
    return SplitAssignment(tuple(names), tuple(tags), seed)


def kfold(
    ids: Sequence[str],
    labels,
    folds: int = 5,
    seed: int = 0,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
) -> list[SplitAssignment]:
    """Stratified k-fold assignment.

    Folds take the stratified order round-robin as their test partition;
    the rest of each fold is split train:val in the ratio of the first two
    fractions, keeping the validation samples at the tail of the order.
    """

    names, y = _check_dataset(ids, labels)
    train_share, val_share, _ = _check_fractions(fractions)
    if folds < 2:
        raise EvaluationError(f"cross-validation needs at least 2 folds, got {folds}")
    if len(names) < folds:
        raise EvaluationError(f"{len(names)} samples cannot fill {folds} folds")

    order = stratified_order(names, y, seed)
    fold_of = np.empty(len(names), dtype=np.int64)
    fold_of[order] = np.arange(order.size) % folds

    assignments: list[SplitAssignment] = []
    for fold in range(folds):
        remainder = order[fold_of[order] != fold]
        n_val = _round_half_up(remainder.size * val_share / (train_share + val_share))
        if remainder.size >= 2:
            n_val = min(max(n_val, 1), remainder.size - 1)
        tags: list[Partition] = ["test"] * len(names)
        for index in remainder[: remainder.size - n_val]:
            tags[index] = "train"
        for index in remainder[remainder.size - n_val :]:
            tags[index] = "val"
        assignment = SplitAssignment(tuple(names), tuple(tags), seed, fold)
        logger.debug("Fold %d: %s", fold, assignment.counts())
        assignments.append(assignment)
    return assignments


__all__ = [
    "DEFAULT_FRACTIONS",
    "MIN_CLASS_SIZE",
    "kfold",
    "split",
    "stratified_order",
]
