"""Adam training with per-sample augmentation and early stopping."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from app.config.settings import AugmentationSettings, DgcnnConfig
from app.pipelines.autodiff import Adam, AutodiffError, softmax, softmax_cross_entropy
from app.pipelines.geometry import AugmentationConfig, OnhPointCloud, augment
from app.utils.hashing import array_digest
from app.views.records import EpochRecord

from .network import (
    DgcnnError,
    DgcnnModel,
    TrainingManifest,
    forward_features,
    init_model,
    loss_and_gradients,
)

logger = logging.getLogger(__name__)

EpochCallback = Callable[[EpochRecord], None]


@dataclass(frozen=True)
class TrainingResult:
    model: DgcnnModel
    history: list[EpochRecord]


def augmentation_recipe(settings: AugmentationSettings | None, seed: int) -> AugmentationConfig:
    if settings is None:
        return AugmentationConfig(seed=seed)
    return AugmentationConfig(
        rotation_deg=settings.rotation_deg,
        translation_mm=settings.translation_mm,
        crop_fraction=settings.crop_fraction,
        subsample_count=settings.subsample_count,
        noise_sigma_mm=settings.noise_sigma_mm,
        enable_crop=settings.crop,
        enable_subsample=settings.subsample,
        enable_rotation=settings.rotate,
        enable_translation=settings.translate,
        enable_noise=settings.noise,
        seed=seed,
    )


def _sample_seed(seed: int, epoch: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, epoch, index]).generate_state(1)[0])


def _check_set(clouds: Sequence[OnhPointCloud], labels: Sequence[int], name: str) -> np.ndarray:
    if not clouds:
        raise DgcnnError(f"{name} set is empty")
    if len(clouds) != len(labels):
        raise DgcnnError(f"{name} set has {len(clouds)} clouds but {len(labels)} labels")
    for position, cloud in enumerate(clouds):
        if not cloud.canonical:
            raise DgcnnError(f"{name} cloud {position} is not in the canonical BMO frame")
    targets = np.asarray(labels, dtype=np.int64)
    if np.any((targets < 0) | (targets > 1)):
        raise DgcnnError(f"{name} labels must be 0 (robust) or 1 (fragile)")
    return targets


def data_hash(clouds: Sequence[OnhPointCloud], labels: Sequence[int]) -> str:
    arrays = {f"cloud{index}": cloud.features for index, cloud in enumerate(clouds)}
    arrays["labels"] = np.asarray(labels, dtype=np.float64)
    return array_digest(arrays)


def evaluate_set(
    model: DgcnnModel, clouds: Sequence[OnhPointCloud], labels: Sequence[int]
) -> tuple[float, float]:
    """Mean cross-entropy and accuracy, without augmentation."""

    losses, hits = [], 0
    for cloud, target in zip(clouds, labels):
        logits, _ = forward_features(model, cloud.features)
        losses.append(softmax_cross_entropy(logits, int(target)))
        hits += int(np.argmax(logits)) == int(target)
    return float(np.mean(losses)), hits / len(labels)


def predict_set(model: DgcnnModel, clouds: Sequence[OnhPointCloud]) -> np.ndarray:
    """Fragile-class probability per cloud."""

    return np.array(
        [float(softmax(forward_features(model, cloud.features)[0])[1]) for cloud in clouds]
    )


def _dropout_masks(config: DgcnnConfig, rng: np.random.Generator) -> dict[int, np.ndarray]:
    if config.dropout <= 0:
        return {}
    keep = 1.0 - config.dropout
    return {
        layer: (rng.random(width) < keep) / keep
        for layer, width in enumerate(config.head_widths[:-1])
    }


def train(
    train_clouds: Sequence[OnhPointCloud],
    train_labels: Sequence[int],
    val_clouds: Sequence[OnhPointCloud],
    val_labels: Sequence[int],
    config: DgcnnConfig,
    *,
    augmentation: AugmentationSettings | None = None,
    config_hash: str = "",
    on_epoch: EpochCallback | None = None,
) -> TrainingResult:
    """Fit a DGCNN; returns the snapshot with the lowest validation loss."""

    targets = _check_set(train_clouds, train_labels, "training")
    val_targets = _check_set(val_clouds, val_labels, "validation")
    model = init_model(config)
    optimizer = Adam(learning_rate=config.learning_rate)
    order_rng = np.random.default_rng([config.seed, 1])
    dropout_rng = np.random.default_rng([config.seed, 2])

    best_loss = math.inf
    best_weights = {name: value.copy() for name, value in model.weights.items()}
    best_epoch = 0
    stale = 0
    history: list[EpochRecord] = []

    for epoch in range(1, config.epochs + 1):
        order = order_rng.permutation(len(train_clouds))
        epoch_losses: list[float] = []
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            summed: dict[str, np.ndarray] = {}
            for index in batch:
                cloud = train_clouds[index]
                seed = _sample_seed(config.seed, epoch, index)
                augmented = augment(cloud, augmentation_recipe(augmentation, seed))
                if augmented.n_points <= config.k:
                    augmented = cloud
                loss, grads = loss_and_gradients(
                    model,
                    augmented.features,
                    int(targets[index]),
                    dropout_masks=_dropout_masks(config, dropout_rng),
                )
                if not math.isfinite(loss):
                    raise DgcnnError(f"training diverged at epoch {epoch}: loss is {loss}")
                epoch_losses.append(loss)
                for name, grad in grads.items():
                    summed[name] = grad if name not in summed else summed[name] + grad
            mean_grads = {name: grad / len(batch) for name, grad in summed.items()}
            try:
                model.weights = optimizer.step(model.weights, mean_grads)
            except AutodiffError as exc:
                raise DgcnnError(f"training diverged at epoch {epoch}: {exc}") from exc

        val_loss, val_accuracy = evaluate_set(model, val_clouds, val_targets)
        if not math.isfinite(val_loss):
            raise DgcnnError(
                f"training diverged at epoch {epoch}: validation loss is {val_loss}"
            )
        record = EpochRecord(
            epoch=epoch,
            train_loss=float(np.mean(epoch_losses)),
            val_loss=val_loss,
            val_accuracy=val_accuracy,
        )
        history.append(record)
        logger.info(
            "DGCNN epoch %d: train_loss=%.4f val_loss=%.4f val_acc=%.3f",
            epoch,
            record.train_loss,
            val_loss,
            val_accuracy,
        )
        if on_epoch is not None:
            on_epoch(record)

        if val_loss < best_loss:
            best_loss, best_epoch, stale = val_loss, epoch, 0
            best_weights = {name: value.copy() for name, value in model.weights.items()}
        else:
            stale += 1
            if stale >= config.patience:
                logger.info("Early stop at epoch %d (best epoch %d)", epoch, best_epoch)
                break

    manifest = TrainingManifest(
        seed=config.seed,
        data_hash=data_hash(
            list(train_clouds) + list(val_clouds), list(targets) + list(val_targets)
        ),
        best_epoch=best_epoch,
        config_hash=config_hash,
    )
    return TrainingResult(DgcnnModel(config, best_weights, manifest), history)


__all__ = [
    "TrainingResult",
    "augmentation_recipe",
    "data_hash",
    "evaluate_set",
    "predict_set",
    "train",
]
