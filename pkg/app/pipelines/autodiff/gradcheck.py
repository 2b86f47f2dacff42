"""Central finite differences for checking reverse-mode gradients."""

from __future__ import annotations

from typing import Any, Callable, Mapping

import numpy as np

from .arrays import DenseArray, as_dense
from .graph import ComputeGraph, NodeId, evaluate, evaluate_with_gradients


def numerical_gradient(
    fn: Callable[[DenseArray], float], x: DenseArray, h: float = 1e-5
) -> DenseArray:
    """Central-difference gradient of a scalar function of one array."""

    point = as_dense(x, name="x")
    grad = np.zeros_like(point)
    flat = point.reshape(-1)
    grad_flat = grad.reshape(-1)
    for index in range(flat.size):
        original = flat[index]
        flat[index] = original + h
        upper = float(fn(point))
        flat[index] = original - h
        lower = float(fn(point))
        flat[index] = original
        grad_flat[index] = (upper - lower) / (2.0 * h)
    return grad


def relative_error(analytic: DenseArray, numeric: DenseArray) -> float:
    """``|a - n| / max(|a|, |n|, 1e-8)`` in the Euclidean norm."""

    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)), 1e-8)
    return float(np.linalg.norm(analytic - numeric)) / scale


def check_gradients(
    graph: ComputeGraph,
    inputs: Mapping[str, Any],
    output: NodeId | None = None,
    h: float = 1e-5,
) -> dict[str, float]:
    """Relative error between reverse-mode and numeric gradients per input."""

    _, analytic = evaluate_with_gradients(graph, inputs, output)
    target = len(graph.nodes) - 1 if output is None else output
    bound = {name: as_dense(value, name=name) for name, value in inputs.items()}
    errors: dict[str, float] = {}
    for name in graph.input_names:

        def scalar(value: DenseArray, _name: str = name) -> float:
            trial = dict(bound)
            trial[_name] = value
            return float(np.sum(evaluate(graph, trial, [target])[target]))

        numeric = numerical_gradient(scalar, bound[name], h)
        errors[name] = relative_error(analytic[name], numeric)
    return errors


__all__ = ["check_gradients", "numerical_gradient", "relative_error"]
