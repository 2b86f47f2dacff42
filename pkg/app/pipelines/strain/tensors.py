"""Displacement gradients, finite strain tensors and effective-strain formulas.

Tensors use the field's axis order ``(b, a, p)``; every quantity here is
invariant under that choice of orthonormal axes.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy import ndimage

from app.pipelines.phantom.types import DisplacementField

StrainFormula = Callable[[np.ndarray], np.ndarray]

SYMMETRY_TOLERANCE = 1e-12


class StrainError(RuntimeError):
    """Raised when strain cannot be evaluated for a field or tensor."""


_FORMULAS: dict[str, StrainFormula] = {}


def strain_formula(name: str) -> Callable[[StrainFormula], StrainFormula]:
    def decorator(func: StrainFormula) -> StrainFormula:
        _FORMULAS[name] = func
        return func

    return decorator


def get_formula(name: str) -> StrainFormula:
    try:
        return _FORMULAS[name]
    except KeyError as exc:
        known = ", ".join(sorted(_FORMULAS))
        raise StrainError(f"unknown strain formula '{name}' (known: {known})") from exc


def formula_names() -> tuple[str, ...]:
    return tuple(sorted(_FORMULAS))


@strain_formula("von_mises")
def von_mises(strain: np.ndarray) -> np.ndarray:
    """Equivalent strain ``sqrt(2/3 dev(E):dev(E))``."""

    trace = np.trace(strain, axis1=-2, axis2=-1)
    deviator = strain - trace[..., None, None] / 3.0 * np.eye(3)
    return np.sqrt(2.0 / 3.0 * np.sum(deviator * deviator, axis=(-2, -1)))


@strain_formula("frobenius")
def frobenius(strain: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(strain * strain, axis=(-2, -1)))


def _as_tensor(value, name: str) -> np.ndarray:
    tensor = np.asarray(value, dtype=np.float64)
    if tensor.shape[-2:] != (3, 3):
        raise StrainError(f"{name} must be 3x3, got shape {tensor.shape}")
    if not np.all(np.isfinite(tensor)):
        raise StrainError(f"{name} has non-finite entries")
    return tensor


def _transpose(tensor: np.ndarray) -> np.ndarray:
    return np.swapaxes(tensor, -1, -2)


def green_lagrange(grad_u) -> np.ndarray:
    """``E = 1/2 (H + H^T + H^T H)`` for ``H = grad u``; accepts stacks of tensors."""

    grad = _as_tensor(grad_u, "displacement gradient")
    return 0.5 * (grad + _transpose(grad) + _transpose(grad) @ grad)


def infinitesimal(grad_u) -> np.ndarray:
    """Small-strain tensor ``1/2 (H + H^T)``."""

    grad = _as_tensor(grad_u, "displacement gradient")
    return 0.5 * (grad + _transpose(grad))


def effective_strain(strain, formula: str = "von_mises"):
    """Scalar effective strain of one tensor (float) or a stack (array)."""

    tensor = _as_tensor(strain, "strain tensor")
    asymmetry = np.abs(tensor - _transpose(tensor)).max(initial=0.0)
    if asymmetry > SYMMETRY_TOLERANCE:
        raise StrainError(f"strain tensor is not symmetric (max |E - E^T| = {asymmetry:.3e})")
    values = get_formula(formula)(tensor)
    return float(values) if tensor.ndim == 2 else values


def _interior(field: DisplacementField, voxels: np.ndarray) -> np.ndarray:
    voxels = np.atleast_2d(np.asarray(voxels, dtype=np.int64))
    if voxels.shape[-1] != 3:
        raise StrainError(f"voxel indices need 3 components, got shape {voxels.shape}")
    upper = np.array(field.dims) - 1
    border = np.any((voxels < 1) | (voxels >= upper), axis=1)
    if border.any():
        first = tuple(int(value) for value in voxels[np.argmax(border)])
        raise StrainError(
            f"voxel {first} is on the border; central differences need neighbours"
        )
    return voxels


def gradients_at(field: DisplacementField, voxels) -> np.ndarray:
    """Central-difference ``grad u`` at interior voxels, shape ``(M, 3, 3)``.

    Entry ``[m, i, j]`` is ``du_i / dx_j``.
    """

    voxels = _interior(field, voxels)
    grads = np.empty((voxels.shape[0], 3, 3))
    for axis, step in enumerate(field.spacing_mm):
        offset = np.zeros(3, dtype=np.int64)
        offset[axis] = 1
        ahead = voxels + offset
        behind = voxels - offset
        forward = field.u[ahead[:, 0], ahead[:, 1], ahead[:, 2]]
        backward = field.u[behind[:, 0], behind[:, 1], behind[:, 2]]
        grads[:, :, axis] = (forward - backward) / (2.0 * step)
    return grads


def displacement_gradient(field: DisplacementField, voxel) -> np.ndarray:
    """``grad u`` at one interior voxel."""

    return gradients_at(field, np.asarray(voxel, dtype=np.int64).reshape(1, 3))[0]


def gradient_field(field: DisplacementField) -> np.ndarray:
    """``grad u`` on every interior voxel, shaped ``(nb-2, na-2, np-2, 3, 3)``."""

    if min(field.dims) < 3:
        raise StrainError(f"field {field.dims} has no interior voxels")
    u = field.u
    grads = np.empty(tuple(size - 2 for size in field.dims) + (3, 3))
    inner = (slice(1, -1),) * 3
    for axis, step in enumerate(field.spacing_mm):
        ahead = list(inner)
        behind = list(inner)
        ahead[axis] = slice(2, None)
        behind[axis] = slice(None, -2)
        grads[..., axis] = (u[tuple(ahead)] - u[tuple(behind)]) / (2.0 * step)
    return grads


def interior_lc_voxels(field: DisplacementField) -> np.ndarray:
    """LC voxels left after a one-voxel erosion (grid borders count as outside)."""

    eroded = ndimage.binary_erosion(field.lc_mask, border_value=0)
    return np.argwhere(eroded)


def lc_average_effective_strain(
    field: DisplacementField, formula: str = "von_mises"
) -> float:
    """Unweighted mean effective strain over the eroded LC mask."""

    voxels = interior_lc_voxels(field)
    if voxels.shape[0] == 0:
        raise StrainError("LC mask is empty after one-voxel erosion")
    strain = green_lagrange(gradients_at(field, voxels))
    return float(np.mean(get_formula(formula)(strain)))


__all__ = [
    "StrainError",
    "StrainFormula",
    "displacement_gradient",
    "effective_strain",
    "formula_names",
    "frobenius",
    "get_formula",
    "gradient_field",
    "gradients_at",
    "green_lagrange",
    "infinitesimal",
    "interior_lc_voxels",
    "lc_average_effective_strain",
    "strain_formula",
    "von_mises",
]
