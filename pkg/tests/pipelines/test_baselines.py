import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.spatial.transform import Rotation

from app.config.settings import AutoencoderConfig, PhantomConfig
from app.pipelines.baselines import (
    STRUCTURAL_FEATURES,
    BaselineError,
    ae_classify,
    ae_classify_many,
    bmo_area,
    dice,
    extract_structural_parameters,
    forest_artifact,
    init_autoencoder,
    load_autoencoder,
    load_forest,
    read_features_csv,
    reconstruction_dice,
    rf_predict,
    rf_predict_many,
    save_autoencoder,
    save_forest,
    shape_index,
    train_autoencoder,
    train_classifier,
    train_random_forest,
    write_features_csv,
)
from app.pipelines.geometry import BoundarySurface, SurfaceRole, Tissue, fit_bmo_plane
from app.pipelines.phantom import (
    VolumeGrid,
    central_section,
    generate_cohort,
    generate_phantom,
    load_coupling,
    reference_params,
)
from app.utils.hashing import array_digest


@pytest.fixture(scope="module")
def grid():
    return VolumeGrid.from_config(PhantomConfig())


@pytest.fixture(scope="module")
def phantom(grid):
    params = reference_params(load_coupling(), fragility=0.5)
    volume, surfaces = generate_phantom(params, 21, grid=grid)
    return volume, surfaces


@pytest.fixture(scope="module")
def vector(phantom):
    volume, surfaces = phantom
    return extract_structural_parameters(volume, surfaces, fit_bmo_plane(volume.bmo_points))


def test_structural_parameters_match_phantom_truth(phantom, vector):
    volume, _ = phantom
    truth = volume.truth
    diagonal = float(np.linalg.norm(volume.spacing_mm))
    assert vector.values.shape == (29,)
    assert len(STRUCTURAL_FEATURES) == 29
    assert vector["prelamina_depth_mm"] == pytest.approx(truth.prelamina_depth_mm, abs=diagonal)
    assert vector["lc_depth_mm"] == pytest.approx(truth.lc_depth_mm, abs=diagonal)
    assert vector["bmo_area_mm2"] == pytest.approx(truth.bmo_area_mm2, rel=0.02)
    assert vector["lc_shape_index"] > 0.9
    assert np.all(vector.octants("rim_width_mm") > 0)
    assert np.all(vector.octants("rnfl_thickness_mm") > 0)
    assert np.all(vector.octants("gcl_ipl_thickness_mm") > 0)
    assert vector["min_prelamina_thickness_mm"] > 0


def test_structural_parameters_survive_a_rigid_move(phantom, vector):
    volume, surfaces = phantom
    rotation = Rotation.from_euler("xyz", [4.0, -3.0, 25.0], degrees=True).as_matrix()
    shift = np.array([0.4, -1.2, 0.3])

    def move(points):
        return points @ rotation.T + shift

    moved_surfaces = [BoundarySurface(s.tissue, s.role, move(s.points)) for s in surfaces]
    moved_volume = type(volume)(volume.labels, volume.grid, move(volume.bmo_points))
    plane = fit_bmo_plane(moved_volume.bmo_points, anterior=rotation[:, 2])
    moved = extract_structural_parameters(
        moved_volume, moved_surfaces, plane, scan_axes=rotation
    )
    diagonal = float(np.linalg.norm(volume.spacing_mm))
    assert_allclose(moved.values, vector.values, atol=diagonal)


def test_missing_surface_is_named(phantom):
    volume, surfaces = phantom
    kept = [
        s for s in surfaces if not (s.tissue is Tissue.LC and s.role is SurfaceRole.ANTERIOR)
    ]
    with pytest.raises(BaselineError, match="LC anterior"):
        extract_structural_parameters(volume, kept, fit_bmo_plane(volume.bmo_points))


def test_spherical_cap_has_unit_shape_index():
    x, y = np.meshgrid(np.linspace(-0.8, 0.8, 25), np.linspace(-0.8, 0.8, 25))
    x, y = x.ravel(), y.ravel()
    radius = 4.0
    cap = np.column_stack([x, y, radius - np.sqrt(radius**2 - x**2 - y**2)])
    assert abs(shape_index(cap)) == pytest.approx(1.0, abs=0.02)
    assert shape_index(cap) > 0
    assert shape_index(cap * [1.0, 1.0, -1.0]) < 0
    saddle = np.column_stack([x, y, x**2 - y**2])
    assert shape_index(saddle) == pytest.approx(0.0, abs=1e-9)
    assert shape_index(np.column_stack([x, y, 0.1 * x])) == 0.0


def test_circular_bmo_area():
    angles = 2.0 * np.pi * np.arange(48) / 48
    radius = 0.9
    ring = np.column_stack([radius * np.cos(angles), radius * np.sin(angles), np.zeros(48)])
    shuffled = ring[np.random.default_rng(0).permutation(48)]
    assert bmo_area(shuffled) == pytest.approx(np.pi * radius**2, rel=0.01)


def test_feature_csv_round_trip(tmp_path, vector):
    path = write_features_csv([("onh-0000", vector)], tmp_path / "features.csv")
    ids, table = read_features_csv(path)
    assert ids == ["onh-0000"]
    assert_array_equal(table[0], vector.values)


def test_separable_feature_is_learnt():
    x = np.linspace(0.0, 1.0, 20)[:, None]
    y = (x[:, 0] > 0.5).astype(int)
    forest = train_random_forest(x, y, n_trees=10, seed=1)
    predictions = rf_predict_many(forest, x)
    assert np.all((predictions > 0.5) == y.astype(bool))


def _split_oracle(x, y):
    def gini(labels):
        if not labels:
            return 0.0
        share = sum(labels) / len(labels)
        return 1.0 - ((1.0 - share) ** 2 + share**2)

    best = None
    for feature in range(x.shape[1]):
        values = sorted(set(x[:, feature]))
        for low, high in zip(values, values[1:]):
            threshold = 0.5 * (low + high)
            left = [int(label) for row, label in zip(x, y) if row[feature] <= threshold]
            right = [int(label) for row, label in zip(x, y) if row[feature] > threshold]
            weighted = (len(left) * gini(left) + len(right) * gini(right)) / len(y)
            gain = gini([int(label) for label in y]) - weighted
            if best is None or gain > best[2]:
                best = (feature, threshold, gain)
    return best


def test_root_split_matches_exhaustive_enumeration():
    x = np.array(
        [
            [1.0, 5.0, 0.3],
            [2.0, 3.0, 0.1],
            [3.0, 4.0, 0.9],
            [4.0, 1.0, 0.7],
            [5.0, 2.0, 0.5],
            [6.0, 6.0, 0.2],
        ]
    )
    y = np.array([0, 0, 1, 1, 1, 0])
    forest = train_random_forest(x, y, n_trees=1, seed=0, max_features=3, bootstrap=False)
    tree = forest.trees[0]
    feature, threshold, _ = _split_oracle(x, y)
    root = (int(tree.feature[0]), float(tree.threshold[0]))
    assert root == (feature, pytest.approx(threshold))
    assert (feature, threshold) == (2, pytest.approx(0.4))


def test_full_feature_tree_fits_training_data():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(40, 29))
    y = rng.integers(0, 2, size=40)
    y[:2] = [0, 1]
    forest = train_random_forest(x, y, n_trees=1, seed=0, max_features=29, bootstrap=False)
    assert_array_equal(rf_predict_many(forest, x), y.astype(float))


def test_forest_is_reproducible_and_votes_in_steps():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(30, 29))
    y = (x[:, 0] + 0.5 * rng.normal(size=30) > 0).astype(int)
    first = train_random_forest(x, y, n_trees=7, seed=5)
    second = train_random_forest(x, y, n_trees=7, seed=5)
    assert forest_artifact(first) == forest_artifact(second)
    scores = rf_predict_many(first, rng.normal(size=(20, 29)))
    assert np.all(np.isin(np.round(scores * 7), np.arange(8)))
    assert_allclose(np.round(scores * 7), scores * 7, atol=1e-12)


def test_forest_file_round_trip(tmp_path):
    x = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1])
    forest = train_random_forest(x, y, n_trees=4, seed=0, bootstrap=False)
    assert rf_predict(forest, [3.0]) == 1.0
    assert rf_predict(forest, [0.0]) == 0.0
    loaded = load_forest(save_forest(forest, tmp_path / "forest.json"))
    assert_array_equal(rf_predict_many(loaded, x), rf_predict_many(forest, x))


def test_forest_needs_both_classes():
    with pytest.raises(BaselineError, match="both classes"):
        train_random_forest(np.zeros((4, 2)), [1, 1, 1, 1])
    with pytest.raises(BaselineError, match="at least 2"):
        train_random_forest(np.zeros((1, 2)), [1])


def test_dice_examples():
    mask = np.array([[1, 1], [0, 2]])
    assert dice(mask, mask) == 1.0
    assert dice(np.array([1, 1, 0, 0]), np.array([0, 0, 1, 1])) == 0.0
    a = np.array([1, 1, 0, 0])
    b = np.array([1, 0, 1, 0])
    assert dice(a, b, background=0) == pytest.approx(0.5)
    assert dice(a, b) == dice(b, a)
    with pytest.raises(BaselineError, match="shape"):
        dice(np.zeros(3), np.zeros(4))


RASTER = (8, 12)


def _ae_config(**overrides):
    values = dict(
        raster=RASTER,
        hidden_width=32,
        epochs=40,
        batch_size=4,
        learning_rate=5e-3,
        classifier_epochs=200,
        classifier_learning_rate=1e-2,
        patience=200,
        seed=4,
    )
    values.update(overrides)
    return AutoencoderConfig(**values)


def _band_sections(cuts):
    rows, cols = RASTER
    maps = np.zeros((len(cuts), rows, cols), dtype=np.uint8)
    for index, cut in enumerate(cuts):
        maps[index, :cut] = Tissue.RNFL_PLT
        maps[index, cut:] = Tissue.SCLERA
        maps[index, -1] = Tissue.LC
    return maps


def test_autoencoder_loss_goes_down():
    sections = _band_sections([2, 3, 4, 5, 6, 2, 3, 4])
    model, history = train_autoencoder(sections, _ae_config(), val_sections=sections)
    losses = [record.val_loss for record in history]
    assert min(losses) < losses[0]
    assert model.trained
    assert model.encoder["enc1.w"].shape == (32, 64)
    assert np.all(reconstruction_dice(model, sections) >= 0.0)


def test_classifier_keeps_the_encoder_frozen(tmp_path):
    cuts = [2, 3, 2, 3, 5, 6, 5, 6]
    labels = [0, 0, 0, 0, 1, 1, 1, 1]
    sections = _band_sections(cuts)
    model, _ = train_autoencoder(sections, _ae_config())
    before = array_digest(model.encoder)
    classified, history = train_classifier(
        model, sections, labels, val_sections=sections, val_labels=labels
    )
    assert array_digest(classified.encoder) == before
    assert max(record.val_accuracy for record in history) == 1.0
    probabilities = ae_classify_many(classified, sections)
    assert np.all((probabilities > 0.5) == np.array(labels, dtype=bool))

    noise = np.random.default_rng(5).integers(0, 8, size=(5,) + RASTER)
    scores = ae_classify_many(classified, noise)
    assert np.all((scores >= 0) & (scores <= 1))

    save_autoencoder(classified, tmp_path / "ae")
    loaded = load_autoencoder(tmp_path / "ae")
    expected = ae_classify(classified, sections[0])
    assert ae_classify(loaded, sections[0]) == pytest.approx(expected)


def test_untrained_encoder_is_rejected():
    model = init_autoencoder(_ae_config())
    with pytest.raises(BaselineError, match="untrained"):
        train_classifier(model, _band_sections([2, 5]), [0, 1])
    with pytest.raises(BaselineError, match="non-empty"):
        train_autoencoder(np.zeros((0,) + RASTER, dtype=np.uint8), _ae_config())


@pytest.mark.slow
def test_phantom_sections_reconstruct_well(grid):
    config = AutoencoderConfig(epochs=60, seed=0)
    cohort = generate_cohort(60, seed=3, grid=grid, calibrate=False)
    sections = np.stack([central_section(sample.volume, config.raster) for sample in cohort])
    model, _ = train_autoencoder(sections[:50], config, val_sections=sections[50:])
    assert np.mean(reconstruction_dice(model, sections[50:])) >= 0.85
