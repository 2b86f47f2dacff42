"""Training-time point-cloud augmentation."""

from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation

from .types import AugmentationConfig, OnhPointCloud


def _crop(cloud: OnhPointCloud, fraction: float, rng: np.random.Generator) -> OnhPointCloud:
    lower = cloud.positions.min(axis=0)
    upper = cloud.positions.max(axis=0)
    extent = upper - lower
    side = extent * fraction ** (1.0 / 3.0)
    origin = lower + rng.uniform(0.0, 1.0, size=3) * (extent - side)
    inside = np.all((cloud.positions >= origin) & (cloud.positions <= origin + side), axis=1)
    if not inside.any():
        return cloud
    return cloud.take(np.flatnonzero(inside))


def _subsample(cloud: OnhPointCloud, count: int, rng: np.random.Generator) -> OnhPointCloud:
    keep = min(count, cloud.n_points)
    return cloud.take(np.sort(rng.permutation(cloud.n_points)[:keep]))


def random_rotation(max_degrees: float, rng: np.random.Generator) -> np.ndarray:
    """Rotation about a uniformly random axis by an angle in ±max_degrees."""

    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = np.deg2rad(rng.uniform(-max_degrees, max_degrees))
    return Rotation.from_rotvec(axis * angle).as_matrix()


def augment(cloud: OnhPointCloud, cfg: AugmentationConfig) -> OnhPointCloud:
    """Crop, subsample, rotate, translate and jitter in that fixed order."""

    if not cfg.any_enabled:
        return cloud
    rng = np.random.default_rng(cfg.seed)
    result = cloud
    if cfg.enable_crop:
        result = _crop(result, cfg.crop_fraction, rng)
    if cfg.enable_subsample:
        result = _subsample(result, cfg.subsample_count, rng)
    if cfg.enable_rotation:
        result = result.rigid(random_rotation(cfg.rotation_deg, rng), np.zeros(3))
    if cfg.enable_translation:
        shift = rng.uniform(-cfg.translation_mm, cfg.translation_mm, size=3)
        result = result.rigid(np.eye(3), shift)
    if cfg.enable_noise:
        jitter = rng.normal(0.0, cfg.noise_sigma_mm, size=result.positions.shape)
        result = OnhPointCloud(
            result.positions + jitter,
            result.thickness,
            result.tissue,
            False,
            result.bmo,
            result.scan_axes,
        )
    return result


__all__ = ["augment", "random_rotation"]
