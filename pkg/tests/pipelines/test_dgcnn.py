import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from app.config.settings import DgcnnConfig
from app.pipelines.autodiff import check_gradients
from app.pipelines.dgcnn import (
    CriticalPointSet,
    DgcnnError,
    annulus_mass_fraction,
    bmo_radius,
    build_graph,
    critical_density_map,
    edgeconv_forward,
    evaluate_set,
    forward,
    init_model,
    load_model,
    pool_critical_points,
    pooled_bmo_radii,
    predict_proba,
    save_model,
    train,
)
from app.pipelines.geometry import OnhPointCloud
from app.services.experiment import summarize_critical_points


def _small_config(**overrides):
    values = dict(
        k=4,
        edge_channels=[8, 8],
        aggregation_width=16,
        head_widths=[8, 2],
        learning_rate=1e-2,
        epochs=5,
        patience=5,
        batch_size=4,
        seed=3,
    )
    values.update(overrides)
    return DgcnnConfig(**values)


def _cloud(positions, thickness=None, canonical=True, bmo=None):
    positions = np.asarray(positions, dtype=np.float64)
    count = positions.shape[0]
    if thickness is None:
        thickness = np.zeros(count)
    return OnhPointCloud(
        positions,
        thickness,
        np.zeros(count, dtype=np.int64),
        canonical=canonical,
        bmo=np.zeros((0, 3)) if bmo is None else bmo,
    )


def _random_cloud(rng, count=32):
    return _cloud(rng.normal(size=(count, 3)), rng.uniform(0.0, 0.3, size=count))


def _toy_set(rng, per_class=4, count=24):
    clouds, labels = [], []
    for target, height in ((0, -0.5), (1, 0.5)):
        for _ in range(per_class):
            xy = rng.uniform(-1.0, 1.0, size=(count, 2))
            z = height + rng.normal(scale=0.05, size=(count, 1))
            clouds.append(_cloud(np.hstack([xy, z]), rng.uniform(0.1, 0.2, size=count)))
            labels.append(target)
    return clouds, labels


def test_edgeconv_hand_table():
    features = np.array([[0.0], [1.0], [3.0]])
    weight = np.array([[1.0], [2.0]])
    output = edgeconv_forward(features, 1, weight)
    assert_allclose(output, [[2.0], [-0.2], [-0.2]])


def test_edgeconv_zero_weights_return_the_bias():
    rng = np.random.default_rng(0)
    features = rng.normal(size=(10, 4))
    bias = np.array([0.5, -1.0, 0.0])
    output = edgeconv_forward(features, 3, np.zeros((8, 3)), bias)
    assert_allclose(output, np.broadcast_to([0.5, -0.2, 0.0], (10, 3)))


def test_edgeconv_without_centre_block_ignores_translation():
    rng = np.random.default_rng(1)
    features = rng.normal(size=(40, 4))
    weight = rng.normal(size=(8, 6))
    weight[:4] = 0.0
    shifted = features + np.array([3.0, -2.0, 0.5, 1.5])
    assert_allclose(
        edgeconv_forward(features, 5, weight), edgeconv_forward(shifted, 5, weight), atol=1e-9
    )


def test_edgeconv_rejects_too_few_points():
    with pytest.raises(DgcnnError, match="more than k"):
        edgeconv_forward(np.zeros((3, 2)), 3, np.zeros((4, 1)))


def test_logits_and_critical_points_are_permutation_invariant():
    rng = np.random.default_rng(2)
    model = init_model(_small_config())
    for _ in range(10):
        cloud = _random_cloud(rng, 48)
        order = rng.permutation(cloud.n_points)
        logits, critical = forward(cloud, model)
        moved_logits, moved_critical = forward(cloud.take(order), model)
        assert np.max(np.abs(logits - moved_logits)) <= 1e-9
        assert_array_equal(np.sort(order[moved_critical.indices]), critical.indices)


def test_identical_points_have_a_single_critical_point():
    model = init_model(_small_config(k=2))
    cloud = _cloud(np.tile([0.1, 0.2, 0.3], (6, 1)))
    _, critical = forward(cloud, model)
    assert_array_equal(critical.indices, [0])


def test_critical_set_fits_the_pool_width():
    rng = np.random.default_rng(4)
    model = init_model(DgcnnConfig())
    logits, critical = forward(_random_cloud(rng, 128), model)
    assert logits.shape == (2,)
    assert 1 <= critical.indices.size <= 256
    assert critical.channel_argmax.shape == (256,)


def test_forward_is_deterministic():
    rng = np.random.default_rng(5)
    cloud = _random_cloud(rng)
    first = forward(cloud, init_model(_small_config()))
    second = forward(cloud, init_model(_small_config()))
    assert_array_equal(first[0], second[0])
    assert_array_equal(first[1].indices, second[1].indices)
    assert 0.0 <= predict_proba(init_model(_small_config()), cloud) <= 1.0


def test_non_canonical_cloud_is_rejected():
    rng = np.random.default_rng(6)
    cloud = _cloud(rng.normal(size=(12, 3)), canonical=False)
    with pytest.raises(DgcnnError, match="canonical"):
        forward(cloud, init_model(_small_config()))


def test_micro_network_gradients_match_finite_differences():
    config = _small_config(k=2, edge_channels=[3, 4], aggregation_width=5, head_widths=[4, 2])
    rng = np.random.default_rng(7)
    model = init_model(config)
    features = np.column_stack([rng.normal(size=(6, 3)), rng.uniform(0.0, 0.3, size=6)])
    net = build_graph(config, 6, target=1)
    errors = check_gradients(net.graph, {"points": features, **model.weights}, net.loss)
    for name in model.weights:
        assert errors[name] <= 1e-5, name


def test_toy_set_is_overfit():
    rng = np.random.default_rng(8)
    clouds, labels = _toy_set(rng)
    config = _small_config(epochs=200, patience=200, batch_size=8)
    result = train(clouds, labels, clouds, labels, config)
    _, accuracy = evaluate_set(result.model, clouds, labels)
    assert accuracy == 1.0
    assert result.model.manifest.best_epoch >= 1
    assert len(result.history) <= 200


def test_same_seed_gives_the_same_history():
    rng = np.random.default_rng(9)
    clouds, labels = _toy_set(rng, per_class=2)
    first = train(clouds, labels, clouds, labels, _small_config())
    second = train(clouds, labels, clouds, labels, _small_config())
    assert first.history == second.history
    assert first.model.manifest == second.model.manifest


def test_training_checks_its_inputs():
    rng = np.random.default_rng(10)
    clouds, labels = _toy_set(rng, per_class=1)
    with pytest.raises(DgcnnError, match="labels"):
        train(clouds, [0], clouds, labels, _small_config())
    with pytest.raises(DgcnnError, match="canonical"):
        raw = [_cloud(cloud.positions, canonical=False) for cloud in clouds]
        train(raw, labels, clouds, labels, _small_config())


def test_model_files_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    clouds, labels = _toy_set(rng, per_class=2)
    result = train(clouds, labels, clouds, labels, _small_config(epochs=2))
    save_model(result.model, tmp_path / "dgcnn")
    loaded = load_model(tmp_path / "dgcnn")
    assert loaded.config == result.model.config
    assert loaded.manifest == result.model.manifest
    assert_array_equal(forward(clouds[0], loaded)[0], forward(clouds[0], result.model)[0])
    with pytest.raises(DgcnnError):
        save_model(init_model(_small_config()), tmp_path / "untrained")


def test_density_counts_close_pairs():
    close = critical_density_map(np.array([[0.0, 0.0, 0.0], [0.05, 0.0, 0.0]]))
    assert_array_equal(close.counts, [1, 1])
    far = critical_density_map(np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.0, 0.2, 0.0]]))
    assert_array_equal(far.counts, [0, 0, 0])
    with pytest.raises(DgcnnError, match="no critical points"):
        critical_density_map(np.zeros((0, 3)))


def test_density_counts_match_a_pairwise_oracle():
    rng = np.random.default_rng(12)
    points = rng.uniform(0.0, 0.4, size=(150, 3))
    expected = [
        sum(
            1
            for j in range(len(points))
            if j != i and np.linalg.norm(points[i] - points[j]) <= 0.075
        )
        for i in range(len(points))
    ]
    assert_array_equal(critical_density_map(points).counts, expected)


def test_pooling_deduplicates_per_onh():
    first = _cloud([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    second = _cloud([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
    sets = [
        CriticalPointSet(np.array([0, 1, 2]), np.array([0, 1, 2])),
        CriticalPointSet(np.array([0]), np.array([0])),
    ]
    pooled = pool_critical_points([first, second], sets)
    assert pooled.shape == (3, 3)
    with pytest.raises(DgcnnError, match="canonical"):
        pool_critical_points([_cloud(np.zeros((2, 3)), canonical=False)], sets[:1])


def test_annulus_mass_fraction():
    angles = np.linspace(0.0, 2.0 * np.pi, 48, endpoint=False)
    bmo = np.column_stack([np.cos(angles), np.sin(angles), np.zeros(48)])
    cloud = _cloud(np.zeros((3, 3)), bmo=bmo)
    assert bmo_radius(cloud) == pytest.approx(1.0)

    points = np.array([[0.0, 0.0, 0.0], [0.02, 0.0, 0.0], [1.0, 0.0, 0.0], [1.05, 0.0, 0.0]])
    density = critical_density_map(points)
    assert annulus_mass_fraction(density, 1.0) == pytest.approx(0.5)
    assert annulus_mass_fraction(density, 1.0, inner=0.0, outer=2.0) == pytest.approx(1.0)


def _ring_cloud(bmo_radius_mm, rho):
    angles = np.linspace(0.0, 2.0 * np.pi, 48, endpoint=False)
    bmo = bmo_radius_mm * np.column_stack([np.cos(angles), np.sin(angles), np.zeros(48)])
    positions = np.column_stack([rho, np.zeros(len(rho)), np.zeros(len(rho))])
    return _cloud(positions, bmo=bmo)


def test_annulus_uses_each_onh_bmo_radius():
    clouds = [_ring_cloud(1.0, [1.0, 1.02]), _ring_cloud(2.0, [2.8, 2.82])]
    sets = [CriticalPointSet(np.array([0, 1]), np.array([0, 1]))] * 2
    radii = pooled_bmo_radii(clouds, sets)
    assert_allclose(radii, [1.0, 1.0, 2.0, 2.0])

    density = critical_density_map(pool_critical_points(clouds, sets))
    assert annulus_mass_fraction(density, radii) == pytest.approx(1.0)
    assert annulus_mass_fraction(density, float(radii.mean())) == pytest.approx(0.0)

    summary = summarize_critical_points(
        clouds, sets, radius_mm=0.075, annulus=(0.7, 1.5)
    )
    assert summary.annulus_fraction == pytest.approx(1.0)
    assert summary.bmo_radius_mm == pytest.approx(1.5)
    with pytest.raises(DgcnnError, match="3 BMO radii for 4 density points"):
        annulus_mass_fraction(density, radii[:3])
