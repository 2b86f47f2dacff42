from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.spatial.transform import Rotation

from app.config.settings import PhantomConfig
from app.pipelines.phantom import (
    DisplacementField,
    VolumeGrid,
    generate_cohort,
    generate_displacement,
    generate_phantom,
    load_coupling,
    reference_params,
)
from app.pipelines.strain import (
    Robustness,
    StrainError,
    displacement_gradient,
    effective_strain,
    formula_names,
    gradient_field,
    gradients_at,
    green_lagrange,
    infinitesimal,
    label,
    label_field,
    label_record,
    lc_average_effective_strain,
)


def _field(u, spacing=(1.0, 1.0, 1.0), mask=None):
    u = np.asarray(u, dtype=np.float64)
    if mask is None:
        mask = np.ones(u.shape[:3], dtype=bool)
    return DisplacementField(u, spacing, mask)


def _positions(dims, spacing):
    axes = [np.arange(size) * step for size, step in zip(dims, spacing)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def _affine_field(matrix, dims=(5, 6, 7), spacing=(0.035, 0.0115, 0.00387)):
    return _field(_positions(dims, spacing) @ np.asarray(matrix).T, spacing)


def test_affine_field_gradient_is_exact():
    matrix = np.array([[0.01, -0.02, 0.03], [0.0, 0.04, -0.01], [0.02, 0.01, -0.03]])
    field = _affine_field(matrix)
    assert_allclose(displacement_gradient(field, (2, 3, 3)), matrix, atol=1e-12)
    assert_allclose(gradient_field(field), np.broadcast_to(matrix, (3, 4, 5, 3, 3)), atol=1e-12)


def test_constant_field_has_zero_gradient():
    field = _field(np.full((4, 4, 4, 3), 0.37))
    assert_array_equal(displacement_gradient(field, (1, 2, 1)), np.zeros((3, 3)))


def test_border_voxel_is_rejected():
    field = _field(np.zeros((4, 4, 4, 3)))
    with pytest.raises(StrainError, match="border"):
        displacement_gradient(field, (0, 2, 2))
    with pytest.raises(StrainError, match="border"):
        displacement_gradient(field, (1, 2, 3))


def test_central_difference_error_is_second_order():
    errors = []
    for step in (0.1, 0.05, 0.025):
        dims = (int(round(1.0 / step)) + 1, 3, 3)
        x = _positions(dims, (step, 1.0, 1.0))[..., 0]
        u = np.zeros(dims + (3,))
        u[..., 0] = x**3 + x**2
        index = int(round(0.5 / step))
        grad = displacement_gradient(_field(u, (step, 1.0, 1.0)), (index, 1, 1))
        errors.append(abs(grad[0, 0] - (3 * 0.25 + 2 * 0.5)))
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=1e-3)
    assert errors[1] / errors[2] == pytest.approx(4.0, rel=1e-3)


def test_vectorised_and_single_voxel_gradients_agree():
    rng = np.random.default_rng(0)
    field = _field(rng.normal(scale=0.01, size=(5, 6, 7, 3)), (0.2, 0.1, 0.05))
    voxels = np.array([[1, 1, 1], [3, 4, 5], [2, 2, 3]])
    stacked = gradients_at(field, voxels)
    full = gradient_field(field)
    for grad, (b, a, p) in zip(stacked, voxels):
        assert_array_equal(grad, displacement_gradient(field, (b, a, p)))
        assert_array_equal(grad, full[b - 1, a - 1, p - 1])


def test_green_lagrange_examples():
    assert_array_equal(green_lagrange(np.zeros((3, 3))), np.zeros((3, 3)))
    stretch = green_lagrange(np.diag([0.1, 0.0, 0.0]))
    expected = np.zeros((3, 3))
    expected[0, 0] = 0.105
    assert_allclose(stretch, expected, atol=1e-15)
    quarter_turn = Rotation.from_euler("z", 90, degrees=True).as_matrix()
    assert_allclose(green_lagrange(quarter_turn - np.eye(3)), np.zeros((3, 3)), atol=1e-12)


def test_infinitesimal_strain_drops_the_quadratic_term():
    grad = np.diag([0.1, 0.0, 0.0])
    assert infinitesimal(grad)[0, 0] == pytest.approx(0.1)
    assert green_lagrange(grad)[0, 0] - infinitesimal(grad)[0, 0] == pytest.approx(0.005)


def test_effective_strain_examples():
    assert effective_strain(np.zeros((3, 3))) == 0.0
    assert effective_strain(0.02 * np.eye(3)) == pytest.approx(0.0, abs=1e-12)
    epsilon = 0.03
    uniaxial = np.diag([epsilon, -epsilon / 2, -epsilon / 2])
    assert effective_strain(uniaxial) == pytest.approx(epsilon, abs=1e-12)
    assert effective_strain(uniaxial, formula="frobenius") == pytest.approx(
        epsilon * np.sqrt(1.5), abs=1e-12
    )
    assert set(formula_names()) >= {"von_mises", "frobenius"}


@pytest.mark.parametrize("formula", ["von_mises", "frobenius"])
def test_effective_strain_is_rotation_invariant(formula):
    rng = np.random.default_rng(3)
    for seed in range(20):
        raw = rng.normal(scale=0.05, size=(3, 3))
        strain = 0.5 * (raw + raw.T)
        rotation = Rotation.random(random_state=seed).as_matrix()
        rotated = rotation.T @ strain @ rotation
        rotated = 0.5 * (rotated + rotated.T)
        assert effective_strain(rotated, formula) == pytest.approx(
            effective_strain(strain, formula), abs=1e-12
        )
        assert effective_strain(strain, formula) >= 0.0


def test_effective_strain_rejects_bad_input():
    with pytest.raises(StrainError, match="not symmetric"):
        effective_strain(np.array([[0.0, 0.1, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))
    with pytest.raises(StrainError, match="unknown strain formula"):
        effective_strain(np.zeros((3, 3)), formula="tresca")


def test_uniform_strain_over_the_mask():
    matrix = np.diag([0.02, -0.01, -0.01])
    field = _affine_field(matrix, dims=(6, 6, 6), spacing=(0.1, 0.1, 0.1))
    expected = effective_strain(green_lagrange(matrix))
    assert lc_average_effective_strain(field) == pytest.approx(expected, abs=1e-12)


def test_two_halves_average_to_the_midpoint():
    dims = (13, 5, 5)
    low, high = 0.01, 0.05
    x = np.arange(dims[0], dtype=np.float64)
    profile = np.where(x <= 6, low * x, low * 6 + high * (x - 6))
    u = np.zeros(dims + (3,))
    u[..., 0] = profile[:, None, None]
    mask = np.zeros(dims, dtype=bool)
    mask[0:6] = True
    mask[7:13] = True
    value = lc_average_effective_strain(_field(u, mask=mask))

    def single(slope):
        return effective_strain(green_lagrange(np.diag([slope, 0.0, 0.0])))

    assert value == pytest.approx(0.5 * (single(low) + single(high)), abs=1e-12)


def test_lc_average_matches_a_voxel_loop():
    rng = np.random.default_rng(7)
    dims = (6, 7, 8)
    spacing = (0.035, 0.0115, 0.00387)
    u = rng.normal(scale=1e-4, size=dims + (3,))
    mask = rng.random(dims) < 0.8
    field = _field(u, spacing, mask)

    total, count = 0.0, 0
    for b in range(1, dims[0] - 1):
        for a in range(1, dims[1] - 1):
            for p in range(1, dims[2] - 1):
                around = [(b, a, p)]
                for axis in range(3):
                    for delta in (-1, 1):
                        neighbour = [b, a, p]
                        neighbour[axis] += delta
                        around.append(tuple(neighbour))
                if not all(mask[index] for index in around):
                    continue
                grad = np.zeros((3, 3))
                for j in range(3):
                    ahead = [b, a, p]
                    behind = [b, a, p]
                    ahead[j] += 1
                    behind[j] -= 1
                    for i in range(3):
                        delta = u[tuple(ahead)][i] - u[tuple(behind)][i]
                        grad[i, j] = delta / (2 * spacing[j])
                strain = 0.5 * (grad + grad.T + grad.T @ grad)
                trace = strain[0, 0] + strain[1, 1] + strain[2, 2]
                deviator = strain - trace / 3.0 * np.eye(3)
                squared = sum(deviator[i, j] ** 2 for i in range(3) for j in range(3))
                total += (2.0 / 3.0 * squared) ** 0.5
                count += 1
    assert count > 0
    assert lc_average_effective_strain(field) == pytest.approx(total / count, abs=1e-12)


def test_empty_eroded_mask_is_an_error():
    mask = np.zeros((5, 5, 5), dtype=bool)
    mask[2, 2, 2] = True
    with pytest.raises(StrainError, match="empty"):
        lc_average_effective_strain(_field(np.zeros((5, 5, 5, 3)), mask=mask))


def test_rigid_translation_leaves_strain_unchanged_exactly():
    rng = np.random.default_rng(11)
    u = rng.integers(-64, 64, size=(6, 6, 6, 3)) / 1024.0
    shift = np.array([0.25, -0.125, 0.0625])
    spacing = (0.5, 0.25, 0.125)
    base = gradient_field(_field(u, spacing))
    moved = gradient_field(_field(u + shift, spacing))
    assert_array_equal(base, moved)
    assert_array_equal(green_lagrange(base), green_lagrange(moved))


def test_label_rule_and_tie():
    assert label(0.05).label is Robustness.FRAGILE
    assert label(0.03).label is Robustness.ROBUST
    assert label(0.04).label is Robustness.ROBUST
    assert label(0.04).threshold == 0.04
    with pytest.raises(StrainError):
        label(-0.01)


def test_label_is_monotone():
    values = np.linspace(0.0, 0.1, 201)
    classes = [label(float(value)).label.class_index for value in values]
    assert classes == sorted(classes)


def test_label_record_fields():
    record = label_record("onh-0007", label(0.051))
    assert record.model_dump() == {
        "id": "onh-0007",
        "e_eff": 0.051,
        "threshold": 0.04,
        "label": "fragile",
    }


@pytest.fixture(scope="module")
def grid():
    return VolumeGrid.from_config(PhantomConfig())


def test_zero_amplitude_phantom_is_robust(grid):
    params = reference_params(load_coupling(), fragility=0.0)
    volume, _ = generate_phantom(params, 1, grid=grid)
    field = generate_displacement(volume, params, 1)
    assert lc_average_effective_strain(field) == 0.0
    assert label_field("onh-0000", field).label == "robust"


def test_full_load_exceeds_the_threshold(grid):
    strains = []
    for fragility in (0.3, 1.0):
        params = reference_params(load_coupling(), fragility=fragility)
        volume, _ = generate_phantom(params, 2, grid=grid)
        strains.append(lc_average_effective_strain(generate_displacement(volume, params, 2)))
    assert strains[1] > 0.04
    assert strains[0] < strains[1]


def test_translation_does_not_change_phantom_strain(grid):
    params = reference_params(load_coupling(), fragility=0.7)
    volume, _ = generate_phantom(params, 5, grid=grid)
    field = generate_displacement(volume, params, 5)
    still = replace(field, u=field.u - field.translation_mm, translation_mm=np.zeros(3))
    assert lc_average_effective_strain(field) == pytest.approx(
        lc_average_effective_strain(still), rel=1e-9
    )


@pytest.mark.slow
def test_calibrated_cohort_is_balanced(grid):
    cohort = generate_cohort(200, 0.5, seed=0, grid=grid)
    fragile = [label_field(sample.id, sample.field).label == "fragile" for sample in cohort]
    assert 0.4 <= np.mean(fragile) <= 0.6
