"""Symbolic compute graphs and their forward / reverse-mode evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .arrays import AutodiffError, DenseArray, as_dense, check_shape
from .ops import NeighborFn, get_operation

NodeId = int


@dataclass(frozen=True)
class Node:
    """One operation application inside a :class:`ComputeGraph`."""

    id: NodeId
    kind: str
    inputs: tuple[NodeId, ...]
    shape: tuple[int, ...]
    attrs: Mapping[str, Any] = field(default_factory=dict)
    name: str | None = None


class ComputeGraph:
    """Append-only DAG; construction order is a topological order."""

    def __init__(self) -> None:
        self._nodes: list[Node] = []
        self._inputs: dict[str, NodeId] = {}

    @property
    def nodes(self) -> tuple[Node, ...]:
        return tuple(self._nodes)

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(self._inputs)

    def topological_order(self) -> tuple[NodeId, ...]:
        return tuple(range(len(self._nodes)))

    def shape(self, node: NodeId) -> tuple[int, ...]:
        return self._node(node).shape

    def input_node(self, name: str) -> NodeId:
        try:
            return self._inputs[name]
        except KeyError as exc:
            raise AutodiffError(f"graph has no input named '{name}'") from exc

    def input(self, name: str, shape: Sequence[int]) -> NodeId:
        if name in self._inputs:
            raise AutodiffError(f"input '{name}' declared twice")
        node_id = len(self._nodes)
        normalized = () if len(shape) == 0 else check_shape(shape, name=f"input '{name}'")
        self._nodes.append(Node(node_id, "input", (), normalized, {}, name))
        self._inputs[name] = node_id
        return node_id

    def apply(self, kind: str, *inputs: NodeId, **attrs: Any) -> NodeId:
        """Append a node of ``kind``; validates its shape rule immediately."""

        operation = get_operation(kind)
        node_id = len(self._nodes)
        for source in inputs:
            if not 0 <= source < node_id:
                raise AutodiffError(f"node {node_id} ({kind}) references unknown node {source}")
        if operation.arity is not None and len(inputs) != operation.arity:
            raise AutodiffError(
                f"node {node_id} ({kind}) takes {operation.arity} inputs, got {len(inputs)}"
            )
        shapes = [self._nodes[source].shape for source in inputs]
        try:
            shape = operation.infer_shape(shapes, attrs)
        except AutodiffError as exc:
            raise AutodiffError(f"node {node_id} ({kind}): {exc}") from exc
        self._nodes.append(Node(node_id, kind, tuple(inputs), tuple(shape), attrs))
        return node_id

    def matmul(self, a: NodeId, b: NodeId) -> NodeId:
        return self.apply("matmul", a, b)

    def bias_add(self, a: NodeId, bias: NodeId) -> NodeId:
        return self.apply("bias_add", a, bias)

    def linear(self, x: NodeId, weight: NodeId, bias: NodeId) -> NodeId:
        return self.bias_add(self.matmul(x, weight), bias)

    def add(self, a: NodeId, b: NodeId) -> NodeId:
        return self.apply("add", a, b)

    def mul(self, a: NodeId, b: NodeId) -> NodeId:
        return self.apply("mul", a, b)

    def scale(self, a: NodeId, factor: float) -> NodeId:
        return self.apply("scale", a, factor=float(factor))

    def leaky_relu(self, a: NodeId, slope: float) -> NodeId:
        return self.apply("leaky_relu", a, slope=float(slope))

    def concat(self, parts: Sequence[NodeId], axis: int = -1) -> NodeId:
        return self.apply("concat", *parts, axis=axis)

    def reshape(self, a: NodeId, shape: Sequence[int]) -> NodeId:
        return self.apply("reshape", a, shape=tuple(int(size) for size in shape))

    def slice_columns(self, a: NodeId, start: int, stop: int) -> NodeId:
        return self.apply("slice_columns", a, start=int(start), stop=int(stop))

    def sum(self, a: NodeId) -> NodeId:
        return self.apply("sum", a)

    def mean(self, a: NodeId) -> NodeId:
        return self.apply("mean", a)

    def max(self, a: NodeId, axis: int = 0) -> NodeId:
        return self.apply("max", a, axis=int(axis))

    def edge_features(
        self, x: NodeId, metric: NodeId, k: int, neighbors: NeighborFn
    ) -> NodeId:
        return self.apply("edge_features", x, metric, k=int(k), neighbors=neighbors)

    def dropout(self, a: NodeId, mask: np.ndarray) -> NodeId:
        return self.apply("dropout", a, mask=np.asarray(mask, dtype=np.float64))

    def softmax_cross_entropy(self, logits: NodeId, target: int | Sequence[int]) -> NodeId:
        return self.apply(
            "softmax_cross_entropy", logits, target=np.asarray(target, dtype=np.int64)
        )

    def _node(self, node: NodeId) -> Node:
        if not 0 <= node < len(self._nodes):
            raise AutodiffError(f"unknown node {node}")
        return self._nodes[node]


def _bind(graph: ComputeGraph, inputs: Mapping[str, Any]) -> dict[NodeId, DenseArray]:
    unknown = sorted(set(inputs) - set(graph.input_names))
    if unknown:
        raise AutodiffError(f"unknown inputs: {', '.join(unknown)}")
    bound: dict[NodeId, DenseArray] = {}
    for name in graph.input_names:
        node_id = graph.input_node(name)
        if name not in inputs:
            raise AutodiffError(f"input '{name}' (node {node_id}) is not bound")
        value = as_dense(inputs[name], name=f"input '{name}'")
        expected = graph.shape(node_id)
        if value.shape != expected:
            raise AutodiffError(
                f"input '{name}' (node {node_id}) expects shape {expected}, got {value.shape}"
            )
        bound[node_id] = value
    return bound


def _forward(
    graph: ComputeGraph, inputs: Mapping[str, Any], last: NodeId
) -> tuple[list[DenseArray | None], list[Any]]:
    bound = _bind(graph, inputs)
    values: list[DenseArray | None] = [None] * (last + 1)
    saved: list[Any] = [None] * (last + 1)
    for node in graph.nodes[: last + 1]:
        if node.kind == "input":
            values[node.id] = bound[node.id]
            continue
        operation = get_operation(node.kind)
        args = [values[source] for source in node.inputs]
        value, saved[node.id] = operation.forward(args, node.attrs)
        values[node.id] = np.asarray(value, dtype=np.float64)
    return values, saved


def _resolve_output(graph: ComputeGraph, output: NodeId | None) -> NodeId:
    if not graph.nodes:
        raise AutodiffError("cannot evaluate an empty graph")
    node_id = len(graph.nodes) - 1 if output is None else output
    graph.shape(node_id)
    return node_id


def evaluate(
    graph: ComputeGraph, inputs: Mapping[str, Any], outputs: Iterable[NodeId] | None = None
) -> dict[NodeId, DenseArray]:
    """Forward pass only; returns the values of ``outputs`` (default: last node)."""

    wanted = [_resolve_output(graph, None)] if outputs is None else list(outputs)
    if not wanted:
        return {}
    for node_id in wanted:
        graph.shape(node_id)
    values, _ = _forward(graph, inputs, max(wanted))
    return {node_id: values[node_id] for node_id in wanted}


def evaluate_with_gradients(
    graph: ComputeGraph,
    inputs: Mapping[str, Any],
    output: NodeId | None = None,
) -> tuple[DenseArray, dict[str, DenseArray]]:
    """Forward value of ``output`` plus exact gradients for every named input."""

    out_id = _resolve_output(graph, output)
    out_shape = graph.shape(out_id)
    if int(np.prod(out_shape)) != 1:
        raise AutodiffError(
            f"gradients need a scalar output; node {out_id} has shape {out_shape}"
        )
    values, saved = _forward(graph, inputs, out_id)
    grads: list[DenseArray | None] = [None] * (out_id + 1)
    grads[out_id] = np.ones(out_shape, dtype=np.float64)

    for node in reversed(graph.nodes[: out_id + 1]):
        grad = grads[node.id]
        if grad is None or node.kind == "input":
            continue
        operation = get_operation(node.kind)
        args = [values[source] for source in node.inputs]
        partials = operation.backward(grad, args, values[node.id], saved[node.id], node.attrs)
        for source, partial in zip(node.inputs, partials):
            if partial is None:
                continue
            current = grads[source]
            grads[source] = partial if current is None else current + partial

    result: dict[str, DenseArray] = {}
    for name in graph.input_names:
        node_id = graph.input_node(name)
        grad = grads[node_id] if node_id <= out_id else None
        result[name] = (
            np.zeros(graph.shape(node_id))
            if grad is None
            else np.asarray(grad, dtype=np.float64)
        )
    return values[out_id], result


__all__ = ["ComputeGraph", "Node", "NodeId", "evaluate", "evaluate_with_gradients"]
