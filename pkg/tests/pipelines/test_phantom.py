from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.spatial import cKDTree

from app.config.settings import PhantomConfig
from app.pipelines.geometry import SurfaceRole, Tissue
from app.pipelines.phantom import (
    LABEL_NAMES,
    PhantomError,
    PhantomParams,
    VolumeGrid,
    central_section,
    cohort_from_manifest,
    generate_cohort,
    generate_displacement,
    generate_phantom,
    load_coupling,
    parse_coupling,
    read_displacement,
    read_params,
    read_surfaces_csv,
    read_volume,
    reference_params,
    write_displacement,
    write_params,
    write_surfaces_csv,
    write_volume,
)


@pytest.fixture(scope="module")
def grid():
    return VolumeGrid.from_config(PhantomConfig())


@pytest.fixture(scope="module")
def params():
    return reference_params(load_coupling(), fragility=0.6)


@pytest.fixture(scope="module")
def phantom(grid, params):
    return generate_phantom(params, 11, grid=grid)


def _voxel_positions(indices, grid):
    s_b, s_a, s_p = grid.spacing_mm
    return np.column_stack(
        [indices[:, 1] * s_a, indices[:, 0] * s_b, -indices[:, 2] * s_p]
    )


def _column_radius(grid):
    x, y = grid.column_coordinates()
    cx, cy = grid.canal_center_mm
    return np.hypot(x - cx, y - cy)


def test_default_grid_is_the_clinical_raster():
    grid = VolumeGrid()
    assert grid.dims == (97, 384, 496)
    assert_allclose(grid.spacing_mm, (0.035, 0.0115, 0.00387))


def test_desk_grid_keeps_the_clinical_extent(grid):
    assert grid.dims == (33, 128, 160)
    assert_allclose(grid.extent_mm, VolumeGrid().extent_mm)


def test_labels_cover_every_tissue(phantom, grid):
    volume, _ = phantom
    assert volume.labels.dtype == np.uint8
    assert volume.labels.shape == grid.dims
    assert set(np.unique(volume.labels)) == set(range(8))
    assert set(LABEL_NAMES) == {str(value) for value in range(8)}


def test_bmo_points_sit_on_the_rpe_opening(phantom, grid, params):
    volume, _ = phantom
    cx, cy = grid.canal_center_mm
    s_b, s_a, _ = grid.spacing_mm
    distance = np.hypot(volume.bmo_points[:, 0] - cx, volume.bmo_points[:, 1] - cy)
    assert volume.bmo_points.shape == (48, 3)
    assert np.all(np.abs(distance - params.bmo_radius_mm) <= max(s_a, s_b))

    rpe_columns = volume.mask(Tissue.RPE_BM).any(axis=2)
    rho = _column_radius(grid)[rpe_columns]
    assert rho.min() >= params.bmo_radius_mm
    assert rho.min() < params.bmo_radius_mm + max(s_a, s_b)


def test_surface_points_lie_next_to_their_tissue(phantom, grid):
    volume, surfaces = phantom
    diagonal = float(np.linalg.norm(grid.spacing_mm))
    assert len(surfaces) == 14
    for surface in surfaces:
        voxels = np.argwhere(volume.labels == int(surface.tissue))
        tree = cKDTree(_voxel_positions(voxels, grid))
        distance, _ = tree.query(surface.points)
        assert distance.max() <= diagonal, (surface.tissue, surface.role)


def test_canal_columns_are_ordered_ilm_then_lamina(phantom, grid, params):
    volume, surfaces = phantom
    rho = _column_radius(grid)
    for b, a in np.argwhere(rho < 0.8 * params.bmo_radius_mm):
        column = volume.labels[b, a]
        prelamina = np.flatnonzero(column == Tissue.RNFL_PLT)
        lamina = np.flatnonzero(column == Tissue.LC)
        assert prelamina.size and lamina.size
        assert prelamina.max() < lamina.min()

    by_key = {(surface.tissue, surface.role): surface for surface in surfaces}
    anterior = by_key[(Tissue.LC, SurfaceRole.ANTERIOR)].points
    posterior = by_key[(Tissue.LC, SurfaceRole.POSTERIOR)].points
    assert anterior[:, 2].max() > posterior[:, 2].min()
    assert np.median(anterior[:, 2]) > np.median(posterior[:, 2])


def test_truth_matches_the_requested_geometry(phantom, params):
    volume, _ = phantom
    truth = volume.truth
    assert truth.lc_depth_mm == params.lc_depth_mm
    assert truth.bmo_area_mm2 == pytest.approx(np.pi * params.bmo_radius_mm**2)
    assert_allclose(volume.bmo_points[:, 2], -truth.bmo_depth_mm)


def test_same_seed_is_bit_identical(grid, params, phantom):
    volume, surfaces = phantom
    again, again_surfaces = generate_phantom(params, 11, grid=grid)
    assert_array_equal(volume.labels, again.labels)
    for first, second in zip(surfaces, again_surfaces):
        assert_array_equal(first.points, second.points)
    assert_array_equal(
        generate_displacement(volume, params, 11).u, generate_displacement(again, params, 11).u
    )


def test_impossible_geometry_is_rejected(grid, params):
    with pytest.raises(PhantomError, match="LC depth exceeds"):
        generate_phantom(replace(params, lc_depth_mm=1.5), 0, grid=grid)
    with pytest.raises(PhantomError, match="reaches the anterior LC"):
        generate_phantom(replace(params, cup_depth_mm=0.9), 0, grid=grid)
    with pytest.raises(PhantomError, match="lateral half width"):
        generate_phantom(replace(params, bmo_radius_mm=1.6), 0, grid=grid)


def test_params_validate_lengths_and_score(params):
    with pytest.raises(PhantomError, match="positive length"):
        replace(params, cup_depth_mm=0.0)
    with pytest.raises(PhantomError, match="fragility"):
        replace(params, fragility=1.2)
    with pytest.raises(PhantomError, match="thickness_mm"):
        replace(params, thickness_mm={"rnfl": 0.1})


def test_zero_fragility_gives_a_pure_translation(grid, params):
    calm = replace(params, fragility=0.0)
    volume, _ = generate_phantom(calm, 3, grid=grid)
    field = generate_displacement(volume, calm, 3)
    assert np.all(np.abs(field.translation_mm) <= 0.01)
    assert_array_equal(field.u, np.broadcast_to(field.translation_mm, field.u.shape))


def test_field_vanishes_at_the_lateral_borders(phantom, params):
    volume, _ = phantom
    field = generate_displacement(volume, params, 11)
    residual = field.u - field.translation_mm
    assert field.dims == volume.dims
    assert_array_equal(field.lc_mask, volume.mask(Tissue.LC))
    for border in (residual[0], residual[-1], residual[:, 0], residual[:, -1]):
        assert np.all(border == 0.0)


def test_bowing_grows_with_fragility(grid, params):
    peaks = []
    for fragility in (0.2, 0.5, 0.9):
        scored = replace(params, fragility=fragility)
        volume, _ = generate_phantom(scored, 4, grid=grid)
        field = generate_displacement(volume, scored, 4)
        residual = field.u - field.translation_mm
        assert np.all(residual[..., :2] == 0.0)
        peaks.append(residual[..., 2].max())
        expected = load_coupling().load.amplitude_per_radius * fragility * scored.bmo_radius_mm
        assert peaks[-1] == pytest.approx(expected, rel=0.01)
    assert peaks[0] < peaks[1] < peaks[2]


def test_cohort_of_two_draws_distinct_parameters(grid):
    cohort = generate_cohort(2, seed=5, grid=grid, calibrate=False)
    assert len(cohort) == 2
    assert cohort.params[0] != cohort.params[1]
    assert [entry.seed for entry in cohort.manifest().entries] == [5, 6]
    assert cohort.ids == ["onh-0000", "onh-0001"]


def test_cohort_needs_two_phantoms(grid):
    with pytest.raises(PhantomError, match="at least 2"):
        generate_cohort(1, grid=grid, calibrate=False)


def test_cohort_samples_are_built_from_their_own_seed(grid):
    cohort = generate_cohort(3, seed=9, grid=grid, calibrate=False)
    sample = cohort[2]
    volume, _ = generate_phantom(cohort.params[2], 11, grid=grid)
    assert sample.seed == 11
    assert sample.id == "onh-0002"
    assert_array_equal(sample.volume.labels, volume.labels)
    assert_array_equal(sample.field.u, generate_displacement(volume, cohort.params[2], 11).u)


def test_cohort_manifest_rebuilds_the_same_draws(grid):
    cohort = generate_cohort(4, seed=2, grid=grid, calibrate=False)
    rebuilt = cohort_from_manifest(cohort.manifest(), grid=grid)
    assert rebuilt.params == cohort.params
    assert rebuilt.fragility_center == cohort.fragility_center


def test_fragility_tracks_canal_radius(grid):
    cohort = generate_cohort(80, seed=0, grid=grid, calibrate=False)
    radius = np.array([params.bmo_radius_mm for params in cohort.params])
    fragility = np.array([params.fragility for params in cohort.params])
    assert np.corrcoef(radius, fragility)[0, 1] > 0.5
    assert np.all((fragility >= 0.0) & (fragility <= 1.0))


def test_coupling_resource_is_loaded():
    coupling = load_coupling()
    assert coupling.ranges.bmo_radius_mm == (0.75, 1.05)
    assert coupling.ranges.thickness_mm["lc"] == (0.18, 0.28)
    assert coupling.fragility.spread > 0
    with pytest.raises(PhantomError, match="invalid phantom coupling"):
        parse_coupling({"load": {"amplitude": 1.0}})


def test_volume_and_field_files(tmp_path, phantom, params):
    volume, surfaces = phantom
    field = generate_displacement(volume, params, 11)
    write_volume(volume, tmp_path / "volume")
    write_displacement(field, tmp_path / "displacement")
    write_surfaces_csv(surfaces, tmp_path / "surfaces.csv")
    write_params(params, tmp_path / "params.json")

    assert (tmp_path / "volume.raw").stat().st_size == volume.labels.size
    assert (tmp_path / "displacement.raw").stat().st_size == field.u.size * 4
    loaded = read_volume(tmp_path / "volume")
    assert_array_equal(loaded.labels, volume.labels)
    assert_allclose(loaded.bmo_points, volume.bmo_points)
    loaded_field = read_displacement(tmp_path / "displacement", loaded)
    assert_allclose(loaded_field.u, field.u, rtol=1e-6, atol=1e-9)
    assert_allclose(loaded_field.translation_mm, field.translation_mm)
    assert [(s.tissue, s.role) for s in read_surfaces_csv(tmp_path / "surfaces.csv")] == [
        (s.tissue, s.role) for s in surfaces
    ]
    assert read_params(tmp_path / "params.json") == params


def test_truncated_volume_file_is_reported(tmp_path, phantom):
    volume, _ = phantom
    write_volume(volume, tmp_path / "volume")
    (tmp_path / "volume.raw").write_bytes(b"\x00" * 10)
    with pytest.raises(PhantomError, match="expected"):
        read_volume(tmp_path / "volume")


def test_central_section_is_resampled_labels(phantom):
    volume, _ = phantom
    section = central_section(volume, (32, 48))
    assert section.shape == (32, 48)
    assert set(np.unique(section)) <= set(np.unique(volume.labels))
    assert (section == Tissue.LC).any()


@pytest.mark.slow
def test_full_resolution_phantom(params):
    volume, surfaces = generate_phantom(params, 0)
    assert volume.labels.shape == (97, 384, 496)
    assert len(surfaces) == 14
