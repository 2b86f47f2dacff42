"""DGCNN classifier expressed as an autodiff compute graph.

Layout: EdgeConv stages (dynamic k-NN graph, shared linear + LeakyReLU, max
over neighbours) -> concatenated stage outputs -> shared linear to the
aggregation width -> channelwise max over points -> head MLP -> 2 logits.
Graphs without dropout are cached per point count and target class.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from app.config.settings import DgcnnConfig
from app.pipelines.autodiff import (
    AutodiffError,
    ComputeGraph,
    DenseArray,
    NodeId,
    evaluate,
    evaluate_with_gradients,
    leaky_relu,
    load_weights,
    save_weights,
    softmax,
)
from app.pipelines.geometry import OnhPointCloud, knn_graph

logger = logging.getLogger(__name__)


class DgcnnError(RuntimeError):
    """Raised for invalid clouds, weights or diverging training runs."""


@dataclass(frozen=True)
class TrainingManifest:
    seed: int
    data_hash: str
    best_epoch: int
    config_hash: str


@dataclass
class DgcnnModel:
    config: DgcnnConfig
    weights: dict[str, DenseArray]
    manifest: TrainingManifest | None = None

    def __post_init__(self) -> None:
        expected = weight_shapes(self.config)
        if list(self.weights) != list(expected):
            raise DgcnnError(
                f"weights {sorted(self.weights)} do not match the layer plan {list(expected)}"
            )
        for name, shape in expected.items():
            if tuple(self.weights[name].shape) != shape:
                raise DgcnnError(
                    f"weight '{name}' has shape {self.weights[name].shape}, expected {shape}"
                )


@dataclass(frozen=True)
class CriticalPointSet:
    """Points that win the global max pool, as indices into the input cloud."""

    indices: np.ndarray
    channel_argmax: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class NetworkGraph:
    graph: ComputeGraph
    aggregate: NodeId
    logits: NodeId
    loss: NodeId | None


def weight_shapes(config: DgcnnConfig) -> dict[str, tuple[int, ...]]:
    """Every weight array, in evaluation order."""

    shapes: dict[str, tuple[int, ...]] = {}
    width = config.input_channels
    for layer, channels in enumerate(config.edge_channels):
        shapes[f"edge{layer}.w"] = (2 * width, channels)
        shapes[f"edge{layer}.b"] = (channels,)
        width = channels
    shapes["aggregate.w"] = (sum(config.edge_channels), config.aggregation_width)
    shapes["aggregate.b"] = (config.aggregation_width,)
    width = config.aggregation_width
    for layer, channels in enumerate(config.head_widths):
        shapes[f"head{layer}.w"] = (width, channels)
        shapes[f"head{layer}.b"] = (channels,)
        width = channels
    return shapes


def init_model(config: DgcnnConfig, seed: int | None = None) -> DgcnnModel:
    """He-normal weights scaled for LeakyReLU, zero biases."""

    rng = np.random.default_rng(config.seed if seed is None else seed)
    gain = 2.0 / (1.0 + config.leaky_slope**2)
    weights: dict[str, DenseArray] = {}
    for name, shape in weight_shapes(config).items():
        if name.endswith(".b"):
            weights[name] = np.zeros(shape)
        else:
            weights[name] = rng.normal(scale=np.sqrt(gain / shape[0]), size=shape)
    return DgcnnModel(config, weights)


def _neighbors(metric: np.ndarray, k: int) -> np.ndarray:
    return knn_graph(metric, k)


def build_graph(
    config: DgcnnConfig,
    n_points: int,
    *,
    target: int | None = None,
    dropout_masks: Mapping[int, np.ndarray] | None = None,
) -> NetworkGraph:
    if n_points <= config.k:
        raise DgcnnError(f"cloud has {n_points} points; k={config.k} needs more than k")
    graph = ComputeGraph()
    points = graph.input("points", (n_points, config.input_channels))
    weights = {
        name: graph.input(name, shape) for name, shape in weight_shapes(config).items()
    }
    slope = config.leaky_slope

    features = points
    metric = graph.slice_columns(points, 0, 3) if config.spatial_first_metric else points
    stages: list[NodeId] = []
    for layer in range(len(config.edge_channels)):
        edges = graph.edge_features(features, metric, config.k, _neighbors)
        mixed = graph.linear(edges, weights[f"edge{layer}.w"], weights[f"edge{layer}.b"])
        features = graph.max(graph.leaky_relu(mixed, slope), axis=1)
        metric = features
        stages.append(features)

    joined = stages[0] if len(stages) == 1 else graph.concat(stages, axis=-1)
    aggregate = graph.leaky_relu(
        graph.linear(joined, weights["aggregate.w"], weights["aggregate.b"]), slope
    )
    hidden = graph.max(aggregate, axis=0)
    last = len(config.head_widths) - 1
    for layer in range(len(config.head_widths)):
        hidden = graph.linear(hidden, weights[f"head{layer}.w"], weights[f"head{layer}.b"])
        if layer < last:
            hidden = graph.leaky_relu(hidden, slope)
            if dropout_masks and layer in dropout_masks:
                hidden = graph.dropout(hidden, dropout_masks[layer])
    loss = None if target is None else graph.softmax_cross_entropy(hidden, int(target))
    return NetworkGraph(graph, aggregate, hidden, loss)


@lru_cache(maxsize=64)
def _cached_graph(config_json: str, n_points: int, target: int | None) -> NetworkGraph:
    return build_graph(DgcnnConfig.model_validate_json(config_json), n_points, target=target)


def network_graph(
    config: DgcnnConfig, n_points: int, target: int | None = None
) -> NetworkGraph:
    return _cached_graph(config.model_dump_json(), n_points, target)


def _bind(model: DgcnnModel, features: np.ndarray) -> dict[str, Any]:
    return {"points": features, **model.weights}


def critical_set(aggregate: np.ndarray) -> CriticalPointSet:
    """Argmax point per pooled channel, lowest index on ties."""

    argmax = np.argmax(aggregate, axis=0)
    return CriticalPointSet(np.unique(argmax), argmax)


def forward_features(
    model: DgcnnModel, features: np.ndarray
) -> tuple[np.ndarray, CriticalPointSet]:
    """Logits and critical set for an ``(N, C)`` feature array in any frame."""

    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.config.input_channels:
        raise DgcnnError(
            f"features must be (N, {model.config.input_channels}), got {features.shape}"
        )
    net = network_graph(model.config, features.shape[0])
    try:
        values = evaluate(net.graph, _bind(model, features), [net.aggregate, net.logits])
    except AutodiffError as exc:
        raise DgcnnError(f"forward pass failed: {exc}") from exc
    return values[net.logits], critical_set(values[net.aggregate])


def forward(cloud: OnhPointCloud, model: DgcnnModel) -> tuple[np.ndarray, CriticalPointSet]:
    """Classify a canonical cloud; returns logits (robust, fragile) and critical points."""

    if not cloud.canonical:
        raise DgcnnError("point cloud is not in the canonical BMO frame; canonicalize it first")
    return forward_features(model, cloud.features)


def predict_proba(model: DgcnnModel, cloud: OnhPointCloud) -> float:
    """Probability of the fragile class."""

    logits, _ = forward(cloud, model)
    return float(softmax(logits)[1])


def loss_and_gradients(
    model: DgcnnModel,
    features: np.ndarray,
    target: int,
    *,
    dropout_masks: Mapping[int, np.ndarray] | None = None,
) -> tuple[float, dict[str, DenseArray]]:
    """Cross-entropy of one sample and its gradient for every weight."""

    if dropout_masks:
        net = build_graph(
            model.config, features.shape[0], target=target, dropout_masks=dropout_masks
        )
    else:
        net = network_graph(model.config, features.shape[0], target)
    value, grads = evaluate_with_gradients(net.graph, _bind(model, features), net.loss)
    grads.pop("points")
    return float(value), grads


def edgeconv_forward(
    features: np.ndarray,
    k: int,
    weight: np.ndarray,
    bias: np.ndarray | None = None,
    *,
    slope: float = 0.2,
    metric: np.ndarray | None = None,
) -> np.ndarray:
    """One EdgeConv stage outside a graph: ``max_j act([x_i, x_j - x_i] W + b)``.

    Neighbours come from ``metric`` (default: the features themselves).
    """

    features = np.asarray(features, dtype=np.float64)
    count, channels = features.shape
    if count <= k:
        raise DgcnnError(f"EdgeConv needs more than k={k} points, got {count}")
    weight = np.asarray(weight, dtype=np.float64)
    if weight.shape[0] != 2 * channels:
        raise DgcnnError(f"EdgeConv weight needs {2 * channels} rows, got {weight.shape[0]}")
    bias = np.zeros(weight.shape[1]) if bias is None else np.asarray(bias, dtype=np.float64)
    neighbours = knn_graph(features if metric is None else metric, k)
    centre = np.broadcast_to(features[:, None, :], (count, k, channels))
    edges = np.concatenate([centre, features[neighbours] - centre], axis=-1)
    return leaky_relu(edges @ weight + bias, slope).max(axis=1)


def save_model(model: DgcnnModel, stem: Path) -> None:
    if model.manifest is None:
        raise DgcnnError("only trained models carry a manifest to save")
    save_weights(
        stem,
        model.weights,
        seed=model.manifest.seed,
        config_hash=model.manifest.config_hash,
        extra={
            "config": model.config.model_dump(mode="json"),
            "data_hash": model.manifest.data_hash,
            "best_epoch": model.manifest.best_epoch,
        },
    )


def load_model(stem: Path) -> DgcnnModel:
    try:
        arrays, manifest = load_weights(stem)
    except AutodiffError as exc:
        raise DgcnnError(str(exc)) from exc
    if "config" not in manifest.extra:
        raise DgcnnError(f"{stem}: weight manifest carries no DGCNN config")
    config = DgcnnConfig.model_validate(manifest.extra["config"])
    return DgcnnModel(
        config,
        arrays,
        TrainingManifest(
            seed=manifest.seed,
            data_hash=str(manifest.extra.get("data_hash", "")),
            best_epoch=int(manifest.extra.get("best_epoch", 0)),
            config_hash=manifest.config_hash,
        ),
    )


__all__ = [
    "CriticalPointSet",
    "DgcnnError",
    "DgcnnModel",
    "NetworkGraph",
    "TrainingManifest",
    "build_graph",
    "critical_set",
    "edgeconv_forward",
    "forward",
    "forward_features",
    "init_model",
    "load_model",
    "loss_and_gradients",
    "network_graph",
    "predict_proba",
    "save_model",
    "weight_shapes",
]
