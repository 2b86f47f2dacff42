"""Central-section autoencoder and the frozen-encoder robustness classifier.

Sections are tissue label maps of the central B-scan, fed as flattened
one-hot vectors. The encoder maps them to a latent code; the decoder predicts
per-pixel class logits. Classification reuses the encoder unchanged and
trains a small MLP on the latent codes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from app.config.settings import AutoencoderConfig
from app.pipelines.autodiff import (
    Adam,
    AutodiffError,
    ComputeGraph,
    DenseArray,
    NodeId,
    evaluate,
    evaluate_with_gradients,
    load_weights,
    save_weights,
    softmax,
)
from app.views.records import EpochRecord

from .dice import dice
from .types import BaselineError

logger = logging.getLogger(__name__)

Params = dict[str, DenseArray]
BatchLoss = Callable[[Params, np.ndarray], tuple[float, Params]]
Validation = Callable[[Params], tuple[float, float | None]]


@dataclass
class AutoencoderModel:
    config: AutoencoderConfig
    encoder: Params
    decoder: Params
    classifier: Params | None = None
    trained: bool = False

    @property
    def input_width(self) -> int:
        rows, cols = self.config.raster
        return rows * cols * self.config.n_classes


def layer_shapes(config: AutoencoderConfig) -> dict[str, dict[str, tuple[int, ...]]]:
    rows, cols = config.raster
    width = rows * cols * config.n_classes
    hidden, latent = config.hidden_width, config.latent_width
    return {
        "encoder": {
            "enc0.w": (width, hidden),
            "enc0.b": (hidden,),
            "enc1.w": (hidden, latent),
            "enc1.b": (latent,),
        },
        "decoder": {
            "dec0.w": (latent, hidden),
            "dec0.b": (hidden,),
            "dec1.w": (hidden, width),
            "dec1.b": (width,),
        },
        "classifier": {
            "cls0.w": (latent, config.classifier_hidden),
            "cls0.b": (config.classifier_hidden,),
            "cls1.w": (config.classifier_hidden, 2),
            "cls1.b": (2,),
        },
    }


def _init(
    shapes: Mapping[str, tuple[int, ...]], rng: np.random.Generator, slope: float
) -> Params:
    gain = 2.0 / (1.0 + slope**2)
    return {
        name: np.zeros(shape)
        if name.endswith(".b")
        else rng.normal(scale=np.sqrt(gain / shape[0]), size=shape)
        for name, shape in shapes.items()
    }


def init_autoencoder(config: AutoencoderConfig, seed: int | None = None) -> AutoencoderModel:
    rng = np.random.default_rng(config.seed if seed is None else seed)
    shapes = layer_shapes(config)
    return AutoencoderModel(
        config,
        _init(shapes["encoder"], rng, config.leaky_slope),
        _init(shapes["decoder"], rng, config.leaky_slope),
    )


def _as_sections(sections, config: AutoencoderConfig) -> np.ndarray:
    maps = np.asarray(sections)
    if maps.ndim == 2:
        maps = maps[None]
    if maps.ndim != 3 or maps.shape[0] == 0:
        raise BaselineError(
            f"sections must be a non-empty (B, rows, cols) stack, got {maps.shape}"
        )
    if tuple(maps.shape[1:]) != tuple(config.raster):
        raise BaselineError(f"sections are {maps.shape[1:]}, expected raster {config.raster}")
    if maps.min() < 0 or maps.max() >= config.n_classes:
        raise BaselineError(f"section labels must lie in [0, {config.n_classes})")
    return maps.astype(np.int64)


def one_hot(sections: np.ndarray, n_classes: int) -> np.ndarray:
    """``(B, rows * cols * n_classes)`` encoding, class index fastest."""

    batch = sections.shape[0]
    return np.eye(n_classes)[sections.reshape(batch, -1)].reshape(batch, -1)


@dataclass(frozen=True)
class _Graph:
    graph: ComputeGraph
    latent: NodeId
    logits: NodeId
    loss: NodeId | None


def build_autoencoder_graph(
    config: AutoencoderConfig, batch: int, targets: np.ndarray | None = None
) -> _Graph:
    shapes = layer_shapes(config)
    rows, cols = config.raster
    graph = ComputeGraph()
    x = graph.input("sections", (batch, rows * cols * config.n_classes))
    w = {
        name: graph.input(name, shape)
        for part in ("encoder", "decoder")
        for name, shape in shapes[part].items()
    }
    slope = config.leaky_slope
    hidden = graph.leaky_relu(graph.linear(x, w["enc0.w"], w["enc0.b"]), slope)
    latent = graph.linear(hidden, w["enc1.w"], w["enc1.b"])
    hidden = graph.leaky_relu(graph.linear(latent, w["dec0.w"], w["dec0.b"]), slope)
    logits = graph.reshape(
        graph.linear(hidden, w["dec1.w"], w["dec1.b"]), (batch * rows * cols, config.n_classes)
    )
    loss = None if targets is None else graph.softmax_cross_entropy(logits, targets)
    return _Graph(graph, latent, logits, loss)


def build_classifier_graph(
    config: AutoencoderConfig, batch: int, targets: np.ndarray | None = None
) -> _Graph:
    shapes = layer_shapes(config)["classifier"]
    graph = ComputeGraph()
    latent = graph.input("latent", (batch, config.latent_width))
    w = {name: graph.input(name, shape) for name, shape in shapes.items()}
    hidden = graph.leaky_relu(
        graph.linear(latent, w["cls0.w"], w["cls0.b"]), config.leaky_slope
    )
    logits = graph.linear(hidden, w["cls1.w"], w["cls1.b"])
    loss = None if targets is None else graph.softmax_cross_entropy(logits, targets)
    return _Graph(graph, latent, logits, loss)


def _fit(
    params: Params,
    batch_loss: BatchLoss,
    validate: Validation | None,
    *,
    n_samples: int,
    batch_size: int,
    epochs: int,
    patience: int,
    learning_rate: float,
    seed: int,
    what: str,
) -> tuple[Params, list[EpochRecord]]:
    """Minibatch Adam with early stopping; returns the best snapshot."""

    optimizer = Adam(learning_rate=learning_rate)
    order_rng = np.random.default_rng([seed, 1])
    best = {name: value.copy() for name, value in params.items()}
    best_loss = math.inf
    stale = 0
    history: list[EpochRecord] = []
    for epoch in range(1, epochs + 1):
        order = order_rng.permutation(n_samples)
        total = 0.0
        for start in range(0, n_samples, batch_size):
            batch = order[start : start + batch_size]
            loss, grads = batch_loss(params, batch)
            if not math.isfinite(loss):
                raise BaselineError(f"{what} training diverged at epoch {epoch}")
            try:
                params = optimizer.step(params, grads)
            except AutodiffError as exc:
                raise BaselineError(
                    f"{what} training diverged at epoch {epoch}: {exc}"
                ) from exc
            total += loss * batch.size
        train_loss = total / n_samples
        val_loss, val_accuracy = (None, None) if validate is None else validate(params)
        history.append(
            EpochRecord(
                epoch=epoch, train_loss=train_loss, val_loss=val_loss, val_accuracy=val_accuracy
            )
        )
        logger.info(
            "%s epoch %d: train_loss=%.4f val_loss=%s",
            what,
            epoch,
            train_loss,
            "n/a" if val_loss is None else f"{val_loss:.4f}",
        )
        score = train_loss if val_loss is None else val_loss
        if score < best_loss:
            best_loss, stale = score, 0
            best = {name: value.copy() for name, value in params.items()}
        else:
            stale += 1
            if stale >= patience:
                logger.info("%s early stop at epoch %d", what, epoch)
                break
    return best, history


def _reconstruction_loss(
    config: AutoencoderConfig, encoded: np.ndarray, maps: np.ndarray, params: Params
) -> tuple[float, Params]:
    net = build_autoencoder_graph(config, maps.shape[0], maps.reshape(-1))
    value, grads = evaluate_with_gradients(net.graph, {"sections": encoded, **params}, net.loss)
    grads.pop("sections")
    return float(value), grads


def train_autoencoder(
    sections,
    config: AutoencoderConfig,
    *,
    val_sections=None,
) -> tuple[AutoencoderModel, list[EpochRecord]]:
    """Unsupervised fit of encoder and decoder on label-map sections."""

    maps = _as_sections(sections, config)
    encoded = one_hot(maps, config.n_classes)
    model = init_autoencoder(config)
    params = {**model.encoder, **model.decoder}

    def batch_loss(current: Params, batch: np.ndarray) -> tuple[float, Params]:
        return _reconstruction_loss(config, encoded[batch], maps[batch], current)

    validate: Validation | None = None
    if val_sections is not None:
        val_maps = _as_sections(val_sections, config)
        val_encoded = one_hot(val_maps, config.n_classes)

        def _validate(current: Params) -> tuple[float, float | None]:
            net = build_autoencoder_graph(config, val_maps.shape[0], val_maps.reshape(-1))
            inputs = {"sections": val_encoded, **current}
            return float(evaluate(net.graph, inputs, [net.loss])[net.loss]), None

        validate = _validate

    best, history = _fit(
        params,
        batch_loss,
        validate,
        n_samples=maps.shape[0],
        batch_size=config.batch_size,
        epochs=config.epochs,
        patience=config.patience,
        learning_rate=config.learning_rate,
        seed=config.seed,
        what="Autoencoder",
    )
    shapes = layer_shapes(config)
    trained = AutoencoderModel(
        config,
        {name: best[name] for name in shapes["encoder"]},
        {name: best[name] for name in shapes["decoder"]},
        trained=True,
    )
    return trained, history


def _forward(model: AutoencoderModel, maps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    net = build_autoencoder_graph(model.config, maps.shape[0])
    inputs = {
        "sections": one_hot(maps, model.config.n_classes),
        **model.encoder,
        **model.decoder,
    }
    values = evaluate(net.graph, inputs, [net.latent, net.logits])
    return values[net.latent], values[net.logits]


def _require_encoder(model: AutoencoderModel) -> None:
    if not model.trained:
        raise BaselineError("autoencoder encoder is untrained")


def encode(model: AutoencoderModel, sections) -> np.ndarray:
    """Latent codes, ``(B, latent_width)``."""

    _require_encoder(model)
    return _forward(model, _as_sections(sections, model.config))[0]


def reconstruct(model: AutoencoderModel, sections) -> np.ndarray:
    """Most likely tissue label per pixel, ``(B, rows, cols)``."""

    _require_encoder(model)
    maps = _as_sections(sections, model.config)
    _, logits = _forward(model, maps)
    return np.argmax(logits, axis=1).reshape(maps.shape)


def reconstruction_dice(
    model: AutoencoderModel, sections, *, background: int | None = 0
) -> np.ndarray:
    """Dice of each section against its reconstruction."""

    maps = _as_sections(sections, model.config)
    rebuilt = reconstruct(model, maps)
    return np.array(
        [dice(truth, guess, background=background) for truth, guess in zip(maps, rebuilt)]
    )


def _check_labels(labels, count: int) -> np.ndarray:
    targets = np.asarray(labels, dtype=np.int64)
    if targets.shape != (count,):
        raise BaselineError(f"{count} sections but {targets.size} labels")
    if np.any((targets < 0) | (targets > 1)):
        raise BaselineError("labels must be 0 (robust) or 1 (fragile)")
    return targets


def train_classifier(
    model: AutoencoderModel,
    sections,
    labels,
    *,
    val_sections=None,
    val_labels=None,
) -> tuple[AutoencoderModel, list[EpochRecord]]:
    """Fit the MLP head on latent codes; encoder weights are left untouched."""

    config = model.config
    latents = encode(model, sections)
    targets = _check_labels(labels, latents.shape[0])
    params = _init(
        layer_shapes(config)["classifier"],
        np.random.default_rng([config.seed, 3]),
        config.leaky_slope,
    )

    def batch_loss(current: Params, batch: np.ndarray) -> tuple[float, Params]:
        net = build_classifier_graph(config, batch.size, targets[batch])
        value, grads = evaluate_with_gradients(
            net.graph, {"latent": latents[batch], **current}, net.loss
        )
        grads.pop("latent")
        return float(value), grads

    validate: Validation | None = None
    if val_sections is not None and val_labels is not None:
        val_latents = encode(model, val_sections)
        val_targets = _check_labels(val_labels, val_latents.shape[0])

        def _validate(current: Params) -> tuple[float, float | None]:
            net = build_classifier_graph(config, val_targets.size, val_targets)
            values = evaluate(
                net.graph, {"latent": val_latents, **current}, [net.logits, net.loss]
            )
            accuracy = float(np.mean(np.argmax(values[net.logits], axis=1) == val_targets))
            return float(values[net.loss]), accuracy

        validate = _validate

    best, history = _fit(
        params,
        batch_loss,
        validate,
        n_samples=targets.size,
        batch_size=config.batch_size,
        epochs=config.classifier_epochs,
        patience=config.patience,
        learning_rate=config.classifier_learning_rate,
        seed=config.seed,
        what="AE classifier",
    )
    return AutoencoderModel(config, model.encoder, model.decoder, best, trained=True), history


def ae_classify_many(model: AutoencoderModel, sections) -> np.ndarray:
    """Fragile-class probability per section."""

    if model.classifier is None:
        raise BaselineError("autoencoder has no trained classifier head")
    latents = encode(model, sections)
    net = build_classifier_graph(model.config, latents.shape[0])
    logits = evaluate(net.graph, {"latent": latents, **model.classifier}, [net.logits])
    return softmax(logits[net.logits], axis=-1)[:, 1]


def ae_classify(model: AutoencoderModel, section) -> float:
    return float(ae_classify_many(model, np.asarray(section)[None])[0])


def save_autoencoder(
    model: AutoencoderModel, stem: Path, *, config_hash: str = ""
) -> None:
    _require_encoder(model)
    arrays = {**model.encoder, **model.decoder, **(model.classifier or {})}
    save_weights(
        stem,
        arrays,
        seed=model.config.seed,
        config_hash=config_hash,
        extra={"config": model.config.model_dump(mode="json")},
    )


def load_autoencoder(stem: Path) -> AutoencoderModel:
    try:
        arrays, manifest = load_weights(stem)
    except AutodiffError as exc:
        raise BaselineError(str(exc)) from exc
    if "config" not in manifest.extra:
        raise BaselineError(f"{stem}: weight manifest carries no autoencoder config")
    config = AutoencoderConfig.model_validate(manifest.extra["config"])
    shapes = layer_shapes(config)
    parts: dict[str, Params] = {}
    for part, expected in shapes.items():
        present = [name for name in expected if name in arrays]
        if part != "classifier" and len(present) != len(expected):
            raise BaselineError(f"{stem}: {part} weights are incomplete")
        for name in present:
            if arrays[name].shape != expected[name]:
                raise BaselineError(f"{stem}: '{name}' has shape {arrays[name].shape}")
        parts[part] = {name: arrays[name] for name in present}
    return AutoencoderModel(
        config,
        parts["encoder"],
        parts["decoder"],
        parts["classifier"] or None,
        trained=True,
    )


__all__ = [
    "AutoencoderModel",
    "ae_classify",
    "ae_classify_many",
    "build_autoencoder_graph",
    "build_classifier_graph",
    "encode",
    "init_autoencoder",
    "layer_shapes",
    "load_autoencoder",
    "one_hot",
    "reconstruct",
    "reconstruction_dice",
    "save_autoencoder",
    "train_autoencoder",
    "train_classifier",
]
