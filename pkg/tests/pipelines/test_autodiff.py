import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.pipelines.autodiff import (
    Adam,
    AdamState,
    AutodiffError,
    ComputeGraph,
    adam_step,
    check_gradients,
    evaluate,
    evaluate_with_gradients,
    leaky_relu,
    leaky_relu_grad,
    load_weights,
    save_weights,
    softmax_cross_entropy,
)
from app.pipelines.geometry import knn_graph


def test_identity_graph_has_unit_gradient():
    graph = ComputeGraph()
    graph.input("x", (1,))
    value, grads = evaluate_with_gradients(graph, {"x": [3.0]})
    assert float(value[0]) == 3.0
    assert_allclose(grads["x"], [1.0])


def test_sum_of_squares_matches_hand_derivative():
    graph = ComputeGraph()
    x = graph.input("x", (3,))
    graph.sum(graph.mul(x, x))
    value, grads = evaluate_with_gradients(graph, {"x": [1.0, 2.0, 3.0]})
    assert float(value) == 14.0
    assert_allclose(grads["x"], [2.0, 4.0, 6.0])


def test_leaky_relu_values_and_slopes():
    assert float(leaky_relu(-1.0, 0.2)) == pytest.approx(-0.2)
    assert float(leaky_relu(3.0, 0.7)) == 3.0
    assert float(leaky_relu_grad(-1.0, 0.2)) == pytest.approx(0.2)
    assert float(leaky_relu_grad(2.0, 0.2)) == 1.0
    with pytest.raises(AutodiffError):
        leaky_relu(1.0, 1.0)


def test_softmax_cross_entropy_closed_forms():
    assert softmax_cross_entropy([0.0, 0.0], 0) == pytest.approx(math.log(2.0), abs=1e-12)
    assert softmax_cross_entropy([2.0, 0.0], 0) == pytest.approx(
        math.log(1.0 + math.exp(-2.0)), abs=1e-12
    )
    with pytest.raises(AutodiffError):
        softmax_cross_entropy([1.0, 2.0], 2)


def test_softmax_cross_entropy_is_shift_invariant():
    rng = np.random.default_rng(3)
    for _ in range(20):
        logits = rng.normal(size=4)
        shift = rng.uniform(-50.0, 50.0)
        assert abs(
            softmax_cross_entropy(logits, 1) - softmax_cross_entropy(logits + shift, 1)
        ) <= 1e-12


def _weighted_sum(graph, node, name="w"):
    weight = graph.input(name, graph.shape(node))
    return graph.sum(graph.mul(node, weight))


def _neighbors(metric, k):
    return knn_graph(metric, k)


def _graph_cases():
    def matmul(g):
        out = g.matmul(g.input("a", (4, 3)), g.input("b", (3, 2)))
        _weighted_sum(g, out)

    def bias_add(g):
        out = g.bias_add(g.input("a", (5, 3)), g.input("b", (3,)))
        _weighted_sum(g, out)

    def leaky(g):
        _weighted_sum(g, g.leaky_relu(g.input("a", (4, 4)), 0.2))

    def concat(g):
        out = g.concat([g.input("a", (3, 2)), g.input("b", (3, 4))])
        _weighted_sum(g, out)

    def reshape_slice(g):
        out = g.slice_columns(g.reshape(g.input("a", (2, 6)), (4, 3)), 1, 3)
        _weighted_sum(g, out)

    def mean_scale(g):
        g.scale(g.mean(g.mul(g.input("a", (3, 3)), g.input("b", (3, 3)))), 2.5)

    def max_points(g):
        _weighted_sum(g, g.max(g.input("a", (7, 4)), axis=0))

    def max_neighbors(g):
        _weighted_sum(g, g.max(g.input("a", (5, 3, 2)), axis=1))

    def edge_features(g):
        x = g.input("x", (6, 3))
        metric = g.input("metric", (6, 2))
        _weighted_sum(g, g.edge_features(x, metric, 2, _neighbors))

    def dropout(g):
        mask = np.array([[2.0, 0.0, 2.0], [0.0, 2.0, 2.0]])
        _weighted_sum(g, g.dropout(g.input("a", (2, 3)), mask))

    def cross_entropy(g):
        g.softmax_cross_entropy(g.input("logits", (3,)), 2)

    def row_cross_entropy(g):
        g.softmax_cross_entropy(g.input("logits", (4, 3)), [0, 2, 1, 1])

    return [
        matmul,
        bias_add,
        leaky,
        concat,
        reshape_slice,
        mean_scale,
        max_points,
        max_neighbors,
        edge_features,
        dropout,
        cross_entropy,
        row_cross_entropy,
    ]


@pytest.mark.parametrize("build", _graph_cases(), ids=lambda fn: fn.__name__)
def test_reverse_mode_matches_finite_differences(build):
    graph = ComputeGraph()
    build(graph)
    for point in range(10):
        rng = np.random.default_rng(100 + point)
        inputs = {
            name: rng.normal(size=graph.shape(graph.input_node(name)))
            for name in graph.input_names
        }
        errors = check_gradients(graph, inputs)
        assert max(errors.values()) <= 1e-6, errors


def test_max_gradient_routes_only_to_argmax():
    rng = np.random.default_rng(8)
    values = rng.normal(size=(9, 5))
    graph = ComputeGraph()
    pooled = graph.max(graph.input("a", values.shape), axis=0)
    _weighted_sum(graph, pooled)
    _, grads = evaluate_with_gradients(graph, {"a": values, "w": rng.normal(size=5)})
    winners = np.zeros_like(values, dtype=bool)
    winners[np.argmax(values, axis=0), np.arange(5)] = True
    assert np.sum(np.abs(grads["a"][~winners])) == 0.0


def test_max_ties_pick_lowest_index():
    graph = ComputeGraph()
    pooled = graph.max(graph.input("a", (3, 1)), axis=0)
    graph.sum(pooled)
    _, grads = evaluate_with_gradients(graph, {"a": [[1.0], [1.0], [0.0]]})
    assert_allclose(grads["a"], [[1.0], [0.0], [0.0]])


def test_evaluation_is_bit_identical_across_runs():
    rng = np.random.default_rng(0)
    graph = ComputeGraph()
    x = graph.input("x", (10, 3))
    edges = graph.edge_features(x, x, 3, _neighbors)
    graph.sum(graph.max(graph.leaky_relu(edges, 0.2), axis=1))
    inputs = {"x": rng.normal(size=(10, 3))}
    first = evaluate_with_gradients(graph, inputs)
    second = evaluate_with_gradients(graph, inputs)
    assert np.array_equal(first[0], second[0])
    assert np.array_equal(first[1]["x"], second[1]["x"])


def test_shape_mismatch_names_the_node():
    graph = ComputeGraph()
    a = graph.input("a", (2, 3))
    b = graph.input("b", (4, 2))
    with pytest.raises(AutodiffError, match=r"node 2 \(matmul\)"):
        graph.matmul(a, b)


def test_bound_input_with_wrong_shape_is_rejected():
    graph = ComputeGraph()
    graph.sum(graph.input("a", (2,)))
    with pytest.raises(AutodiffError, match="input 'a'"):
        evaluate(graph, {"a": np.zeros(3)})
    with pytest.raises(AutodiffError, match="not bound"):
        evaluate(graph, {})


def test_gradients_require_scalar_output():
    graph = ComputeGraph()
    graph.leaky_relu(graph.input("a", (3,)), 0.1)
    with pytest.raises(AutodiffError, match="scalar output"):
        evaluate_with_gradients(graph, {"a": np.ones(3)})


def test_adam_zero_gradient_leaves_params_unchanged():
    params = np.array([1.0, -2.0])
    state = AdamState.zeros(params.shape)
    updated, after = adam_step(params, np.zeros(2), state)
    assert np.array_equal(updated, params)
    assert np.array_equal(after.m, np.zeros(2))
    assert np.array_equal(after.v, np.zeros(2))
    assert after.t == 1


def test_adam_first_and_second_steps_have_learning_rate_magnitude():
    params = np.array([0.5])
    state = AdamState.zeros(params.shape, learning_rate=0.001)
    first, state = adam_step(params, np.ones(1), state)
    assert float(first[0] - params[0]) == pytest.approx(-0.001, rel=1e-8)
    second, state = adam_step(first, np.ones(1), state)
    assert float(first[0] - second[0]) == pytest.approx(0.001, rel=1e-6)
    assert state.t == 2


def test_adam_rejects_non_finite_gradient_with_name():
    state = AdamState.zeros((2,))
    with pytest.raises(AutodiffError, match="edge0.weight"):
        adam_step(np.zeros(2), np.array([np.nan, 0.0]), state, name="edge0.weight")


def test_adam_wrapper_updates_only_named_gradients():
    optimizer = Adam(learning_rate=0.01)
    params = {"w": np.ones(2), "frozen": np.ones(3)}
    updated = optimizer.step(params, {"w": np.ones(2)})
    assert np.array_equal(updated["frozen"], params["frozen"])
    assert np.all(updated["w"] < 1.0)


def test_weight_files_restore_arrays_and_manifest(tmp_path):
    arrays = {"layer.weight": np.arange(6.0).reshape(2, 3), "layer.bias": np.array([0.5, -1.0])}
    save_weights(tmp_path / "model", arrays, seed=4, config_hash="abc", extra={"best_epoch": 3})
    restored, manifest = load_weights(tmp_path / "model")
    assert list(restored) == ["layer.weight", "layer.bias"]
    assert np.array_equal(restored["layer.weight"], arrays["layer.weight"])
    assert manifest.arrays[1].offset == 48
    assert manifest.extra == {"best_epoch": 3}
    assert (tmp_path / "model.bin").stat().st_size == 64
