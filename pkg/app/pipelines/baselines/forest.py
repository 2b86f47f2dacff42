"""Gini random forest over structural parameters.

Trees are stored as flat node arrays in depth-first order. Each node splits
on ``x[feature] <= threshold``; thresholds are midpoints between consecutive
distinct values. Among equally good splits the lowest feature index and then
the lowest threshold win.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from pydantic import ValidationError

from app.views.artifacts import ForestArtifact, TreeArtifact

from .types import BaselineError

logger = logging.getLogger(__name__)

LEAF = -1


@dataclass(frozen=True)
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    def leaf(self, row: np.ndarray) -> int:
        node = 0
        while self.feature[node] != LEAF:
            if row[self.feature[node]] <= self.threshold[node]:
                node = int(self.left[node])
            else:
                node = int(self.right[node])
        return node

    def vote(self, row: np.ndarray) -> int:
        """Leaf majority; a tied leaf votes robust (0)."""

        robust, fragile = self.counts[self.leaf(row)]
        return int(fragile > robust)


@dataclass(frozen=True)
class RandomForest:
    trees: tuple[DecisionTree, ...]
    n_features: int
    seed: int


def gini(counts: np.ndarray) -> np.ndarray:
    """Gini impurity of ``(..., 2)`` class counts."""

    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum(axis=-1)
    share = counts / np.maximum(total, 1.0)[..., None]
    return 1.0 - np.sum(share * share, axis=-1)


def best_split(
    x: np.ndarray, y: np.ndarray, features: Sequence[int]
) -> tuple[int, float, float] | None:
    """``(feature, threshold, gain)`` of the best Gini split, or None if none exists."""

    n = y.size
    parent = float(gini(np.bincount(y, minlength=2)))
    best: tuple[int, float, float] | None = None
    for feature in sorted(features):
        order = np.argsort(x[:, feature], kind="stable")
        values = x[order, feature]
        ranked = y[order]
        valid = values[1:] > values[:-1]
        if not valid.any():
            continue
        left_n = np.arange(1, n)
        left_fragile = np.cumsum(ranked)[:-1]
        left = np.column_stack([left_n - left_fragile, left_fragile])
        right = np.bincount(y, minlength=2) - left
        weighted = (left_n * gini(left) + (n - left_n) * gini(right)) / n
        gain = np.where(valid, parent - weighted, -np.inf)
        cut = int(np.argmax(gain))
        if best is None or gain[cut] > best[2]:
            best = (int(feature), 0.5 * (values[cut] + values[cut + 1]), float(gain[cut]))
    return best


def grow_tree(
    x: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    *,
    max_features: int,
    min_samples_split: int = 2,
) -> DecisionTree:
    n_features = x.shape[1]
    draw = min(max_features, n_features)
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    counts: list[list[int]] = []

    def add(rows: np.ndarray) -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        counts.append(np.bincount(y[rows], minlength=2).tolist())
        return len(feature) - 1

    stack = [(add(np.arange(y.size)), np.arange(y.size))]
    while stack:
        node, rows = stack.pop()
        robust, fragile = counts[node]
        if robust == 0 or fragile == 0 or rows.size < min_samples_split:
            continue
        if draw == n_features:
            candidates = range(n_features)
        else:
            candidates = rng.choice(n_features, size=draw, replace=False)
        split = best_split(x[rows], y[rows], [int(value) for value in candidates])
        if split is None:
            continue
        feature[node], threshold[node] = split[0], split[1]
        goes_left = x[rows, split[0]] <= split[1]
        left[node] = add(rows[goes_left])
        right[node] = add(rows[~goes_left])
        stack.append((right[node], rows[~goes_left]))
        stack.append((left[node], rows[goes_left]))

    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(counts, dtype=np.int64).reshape(-1, 2),
    )


def _check_training_set(features, labels) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise BaselineError(f"features {x.shape} and labels {y.shape} do not line up")
    if x.shape[0] < 2:
        raise BaselineError("random forest needs at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise BaselineError("features must be finite")
    if np.any((y < 0) | (y > 1)):
        raise BaselineError("labels must be 0 (robust) or 1 (fragile)")
    if np.unique(y).size < 2:
        raise BaselineError("random forest needs both classes in the training set")
    return x, y


def train_random_forest(
    features,
    labels,
    n_trees: int = 100,
    seed: int = 0,
    *,
    max_features: int = 5,
    min_samples_split: int = 2,
    bootstrap: bool = True,
) -> RandomForest:
    """Bagged Gini trees, grown until pure; the same seed gives the same forest."""

    x, y = _check_training_set(features, labels)
    if n_trees < 1:
        raise BaselineError(f"n_trees must be >= 1, got {n_trees}")
    streams = np.random.SeedSequence(seed).spawn(n_trees)
    trees: list[DecisionTree] = []
    for stream in streams:
        rng = np.random.default_rng(stream)
        rows = rng.integers(0, y.size, size=y.size) if bootstrap else np.arange(y.size)
        trees.append(
            grow_tree(
                x[rows],
                y[rows],
                rng,
                max_features=max_features,
                min_samples_split=min_samples_split,
            )
        )
    logger.debug(
        "Grew %d trees on %d samples (mean %.1f nodes)",
        n_trees,
        y.size,
        float(np.mean([tree.n_nodes for tree in trees])),
    )
    return RandomForest(tuple(trees), x.shape[1], seed)


def rf_predict(forest: RandomForest, features) -> float:
    """Share of trees whose leaf majority is fragile."""

    row = np.asarray(features, dtype=np.float64).reshape(-1)
    if row.size != forest.n_features:
        raise BaselineError(f"forest expects {forest.n_features} features, got {row.size}")
    return sum(tree.vote(row) for tree in forest.trees) / len(forest.trees)


def rf_predict_many(forest: RandomForest, features) -> np.ndarray:
    table = np.atleast_2d(np.asarray(features, dtype=np.float64))
    return np.array([rf_predict(forest, row) for row in table])


def forest_artifact(forest: RandomForest, *, config_hash: str = "") -> ForestArtifact:
    return ForestArtifact(
        n_features=forest.n_features,
        seed=forest.seed,
        config_hash=config_hash,
        trees=[
            TreeArtifact(
                feature=tree.feature.tolist(),
                threshold=tree.threshold.tolist(),
                left=tree.left.tolist(),
                right=tree.right.tolist(),
                counts=tree.counts.tolist(),
            )
            for tree in forest.trees
        ],
    )


def save_forest(forest: RandomForest, path: Path, *, config_hash: str = "") -> Path:
    payload = forest_artifact(forest, config_hash=config_hash).model_dump(mode="json")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_forest(path: Path) -> RandomForest:
    try:
        artifact = ForestArtifact.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise BaselineError(f"cannot read forest {path}: {exc.strerror}") from exc
    except ValidationError as exc:
        raise BaselineError(f"{path}: invalid forest file: {exc}") from exc
    trees = tuple(
        DecisionTree(
            np.array(tree.feature, dtype=np.int64),
            np.array(tree.threshold, dtype=np.float64),
            np.array(tree.left, dtype=np.int64),
            np.array(tree.right, dtype=np.int64),
            np.array(tree.counts, dtype=np.int64).reshape(-1, 2),
        )
        for tree in artifact.trees
    )
    if not trees:
        raise BaselineError(f"{path}: forest has no trees")
    return RandomForest(trees, artifact.n_features, artifact.seed)


__all__ = [
    "DecisionTree",
    "RandomForest",
    "best_split",
    "forest_artifact",
    "gini",
    "grow_tree",
    "load_forest",
    "rf_predict",
    "rf_predict_many",
    "save_forest",
    "train_random_forest",
]
