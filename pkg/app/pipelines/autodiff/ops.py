"""Operation kernels: shape rules, forward values and reverse-mode rules.

Each operation is registered under its node kind so :mod:`graph` can look it
up. The eager helpers at the bottom (``leaky_relu``, ``softmax_cross_entropy``
and friends) run the same kernels outside a graph.
"""

from __future__ import annotations

from math import prod
from typing import Any, Callable, ClassVar, Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.special import logsumexp
from scipy.special import softmax as _softmax

from .arrays import AutodiffError, DenseArray, as_dense

Shape = tuple[int, ...]
NeighborFn = Callable[[np.ndarray, int], np.ndarray]


class Operation:
    """Base class for one node kind."""

    kind: ClassVar[str] = ""
    arity: ClassVar[int | None] = None

    def infer_shape(self, shapes: Sequence[Shape], attrs: Mapping[str, Any]) -> Shape:
        raise NotImplementedError

    def forward(
        self, inputs: Sequence[DenseArray], attrs: Mapping[str, Any]
    ) -> tuple[DenseArray, Any]:
        raise NotImplementedError

    def backward(
        self,
        grad: DenseArray,
        inputs: Sequence[DenseArray],
        value: DenseArray,
        saved: Any,
        attrs: Mapping[str, Any],
    ) -> list[DenseArray | None]:
        raise NotImplementedError


_REGISTRY: dict[str, Operation] = {}


def register(cls: type[Operation]) -> type[Operation]:
    _REGISTRY[cls.kind] = cls()
    return cls


def get_operation(kind: str) -> Operation:
    try:
        return _REGISTRY[kind]
    except KeyError as exc:
        raise AutodiffError(f"unknown operation kind '{kind}'") from exc


def registered_kinds() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def _axis(axis: int, ndim: int) -> int:
    if not -ndim <= axis < ndim:
        raise AutodiffError(f"axis {axis} out of range for rank {ndim}")
    return axis % ndim


@register
class MatMul(Operation):
    """``a (..., C) @ b (C, D)`` contracted over the last axis of ``a``."""

    kind = "matmul"
    arity = 2

    def infer_shape(self, shapes, attrs):
        a, b = shapes
        if len(a) < 1 or len(b) != 2 or a[-1] != b[0]:
            raise AutodiffError(f"matmul cannot contract {a} with {b}")
        return a[:-1] + (b[1],)

    def forward(self, inputs, attrs):
        a, b = inputs
        out = a.reshape(-1, b.shape[0]) @ b
        return out.reshape(a.shape[:-1] + (b.shape[1],)), None

    def backward(self, grad, inputs, value, saved, attrs):
        a, b = inputs
        g2 = grad.reshape(-1, b.shape[1])
        a2 = a.reshape(-1, b.shape[0])
        return [(g2 @ b.T).reshape(a.shape), a2.T @ g2]


@register
class BiasAdd(Operation):
    kind = "bias_add"
    arity = 2

    def infer_shape(self, shapes, attrs):
        a, b = shapes
        if len(b) != 1 or len(a) < 1 or a[-1] != b[0]:
            raise AutodiffError(f"bias of shape {b} does not match {a}")
        return a

    def forward(self, inputs, attrs):
        a, b = inputs
        return a + b, None

    def backward(self, grad, inputs, value, saved, attrs):
        return [grad, grad.reshape(-1, grad.shape[-1]).sum(axis=0)]


@register
class Add(Operation):
    kind = "add"
    arity = 2

    def infer_shape(self, shapes, attrs):
        a, b = shapes
        if a != b:
            raise AutodiffError(f"add needs equal shapes, got {a} and {b}")
        return a

    def forward(self, inputs, attrs):
        return inputs[0] + inputs[1], None

    def backward(self, grad, inputs, value, saved, attrs):
        return [grad, grad]


@register
class Multiply(Operation):
    kind = "mul"
    arity = 2

    def infer_shape(self, shapes, attrs):
        a, b = shapes
        if a != b:
            raise AutodiffError(f"mul needs equal shapes, got {a} and {b}")
        return a

    def forward(self, inputs, attrs):
        return inputs[0] * inputs[1], None

    def backward(self, grad, inputs, value, saved, attrs):
        a, b = inputs
        return [grad * b, grad * a]


@register
class Scale(Operation):
    kind = "scale"
    arity = 1

    def infer_shape(self, shapes, attrs):
        return shapes[0]

    def forward(self, inputs, attrs):
        return inputs[0] * float(attrs["factor"]), None

    def backward(self, grad, inputs, value, saved, attrs):
        return [grad * float(attrs["factor"])]


@register
class LeakyRelu(Operation):
    kind = "leaky_relu"
    arity = 1

    def infer_shape(self, shapes, attrs):
        slope = attrs.get("slope")
        if slope is None or not 0.0 <= slope < 1.0:
            raise AutodiffError(f"leaky_relu slope must lie in [0, 1), got {slope}")
        return shapes[0]

    def forward(self, inputs, attrs):
        x = inputs[0]
        return np.where(x >= 0.0, x, attrs["slope"] * x), None

    def backward(self, grad, inputs, value, saved, attrs):
        x = inputs[0]
        return [grad * np.where(x >= 0.0, 1.0, attrs["slope"])]


@register
class Concat(Operation):
    kind = "concat"

    def infer_shape(self, shapes, attrs):
        if not shapes:
            raise AutodiffError("concat needs at least one input")
        ndim = len(shapes[0])
        axis = _axis(attrs.get("axis", -1), ndim)
        for shape in shapes[1:]:
            if len(shape) != ndim or any(
                shape[i] != shapes[0][i] for i in range(ndim) if i != axis
            ):
                raise AutodiffError(f"concat shapes {list(shapes)} disagree off axis {axis}")
        size = sum(shape[axis] for shape in shapes)
        return shapes[0][:axis] + (size,) + shapes[0][axis + 1 :]

    def forward(self, inputs, attrs):
        axis = _axis(attrs.get("axis", -1), inputs[0].ndim)
        return np.concatenate(inputs, axis=axis), None

    def backward(self, grad, inputs, value, saved, attrs):
        axis = _axis(attrs.get("axis", -1), grad.ndim)
        bounds = np.cumsum([x.shape[axis] for x in inputs])[:-1]
        return list(np.split(grad, bounds, axis=axis))


@register
class Reshape(Operation):
    kind = "reshape"
    arity = 1

    def infer_shape(self, shapes, attrs):
        target = tuple(int(size) for size in attrs["shape"])
        if prod(target) != prod(shapes[0]):
            raise AutodiffError(f"cannot reshape {shapes[0]} into {target}")
        return target

    def forward(self, inputs, attrs):
        return inputs[0].reshape(tuple(attrs["shape"])), None

    def backward(self, grad, inputs, value, saved, attrs):
        return [grad.reshape(inputs[0].shape)]


@register
class SliceColumns(Operation):
    """Columns ``[start, stop)`` of the last axis."""

    kind = "slice_columns"
    arity = 1

    def infer_shape(self, shapes, attrs):
        start, stop = int(attrs["start"]), int(attrs["stop"])
        width = shapes[0][-1]
        if not 0 <= start < stop <= width:
            raise AutodiffError(f"column slice [{start}, {stop}) outside width {width}")
        return shapes[0][:-1] + (stop - start,)

    def forward(self, inputs, attrs):
        return inputs[0][..., attrs["start"] : attrs["stop"]].copy(), None

    def backward(self, grad, inputs, value, saved, attrs):
        out = np.zeros_like(inputs[0])
        out[..., attrs["start"] : attrs["stop"]] = grad
        return [out]


@register
class Sum(Operation):
    kind = "sum"
    arity = 1

    def infer_shape(self, shapes, attrs):
        return ()

    def forward(self, inputs, attrs):
        return np.asarray(inputs[0].sum(), dtype=np.float64), None

    def backward(self, grad, inputs, value, saved, attrs):
        return [np.full_like(inputs[0], float(grad))]


@register
class Mean(Operation):
    kind = "mean"
    arity = 1

    def infer_shape(self, shapes, attrs):
        return ()

    def forward(self, inputs, attrs):
        return np.asarray(inputs[0].mean(), dtype=np.float64), None

    def backward(self, grad, inputs, value, saved, attrs):
        return [np.full_like(inputs[0], float(grad) / inputs[0].size)]


@register
class Max(Operation):
    """Maximum over one axis; the gradient goes to the lowest-index argmax."""

    kind = "max"
    arity = 1

    def infer_shape(self, shapes, attrs):
        shape = shapes[0]
        axis = _axis(attrs.get("axis", 0), len(shape))
        return shape[:axis] + shape[axis + 1 :]

    def forward(self, inputs, attrs):
        x = inputs[0]
        axis = _axis(attrs.get("axis", 0), x.ndim)
        index = np.expand_dims(np.argmax(x, axis=axis), axis)
        return np.take_along_axis(x, index, axis=axis).squeeze(axis), index

    def backward(self, grad, inputs, value, saved, attrs):
        x = inputs[0]
        axis = _axis(attrs.get("axis", 0), x.ndim)
        out = np.zeros_like(x)
        np.put_along_axis(out, saved, np.expand_dims(grad, axis), axis=axis)
        return [out]


@register
class EdgeFeatures(Operation):
    """``concat(x_i, x_j - x_i)`` over the k neighbours of each point.

    Neighbours are chosen by ``attrs["neighbors"](metric, k)`` from the second
    input; the selection itself carries no gradient.
    """

    kind = "edge_features"
    arity = 2

    def infer_shape(self, shapes, attrs):
        x, metric = shapes
        k = int(attrs.get("k", 0))
        if len(x) != 2 or len(metric) != 2 or x[0] != metric[0]:
            raise AutodiffError(f"edge_features needs (N, C) and (N, M), got {x} and {metric}")
        if k < 1:
            raise AutodiffError(f"edge_features needs k >= 1, got {k}")
        if x[0] <= k:
            raise AutodiffError(f"edge_features needs more than k={k} points, got {x[0]}")
        if not callable(attrs.get("neighbors")):
            raise AutodiffError("edge_features needs a neighbour function")
        return (x[0], k, 2 * x[1])

    def forward(self, inputs, attrs):
        x, metric = inputs
        k = int(attrs["k"])
        neighbors = np.asarray(attrs["neighbors"](metric, k), dtype=np.intp)
        centre = x[:, None, :]
        edges = np.concatenate(
            [np.broadcast_to(centre, (x.shape[0], k, x.shape[1])), x[neighbors] - centre],
            axis=-1,
        )
        return edges, neighbors

    def backward(self, grad, inputs, value, saved, attrs):
        x = inputs[0]
        n, c = x.shape
        k = saved.shape[1]
        own = grad[..., :c]
        relative = grad[..., c:]
        gather = sparse.csr_matrix(
            (np.ones(n * k), (saved.ravel(), np.arange(n * k))), shape=(n, n * k)
        )
        dx = own.sum(axis=1) - relative.sum(axis=1) + gather @ relative.reshape(n * k, c)
        return [np.asarray(dx), None]


@register
class Dropout(Operation):
    """Multiply by a fixed, pre-scaled mask."""

    kind = "dropout"
    arity = 1

    def infer_shape(self, shapes, attrs):
        mask = np.asarray(attrs["mask"])
        if mask.shape != shapes[0]:
            raise AutodiffError(f"dropout mask {mask.shape} does not match {shapes[0]}")
        return shapes[0]

    def forward(self, inputs, attrs):
        return inputs[0] * attrs["mask"], None

    def backward(self, grad, inputs, value, saved, attrs):
        return [grad * attrs["mask"]]


@register
class SoftmaxCrossEntropy(Operation):
    """Cross-entropy of a logit vector, or the row mean for a logit matrix."""

    kind = "softmax_cross_entropy"
    arity = 1

    def infer_shape(self, shapes, attrs):
        shape = shapes[0]
        if len(shape) not in (1, 2) or shape[-1] < 2:
            raise AutodiffError(f"softmax_cross_entropy needs >= 2 classes, got {shape}")
        targets = np.asarray(attrs["target"])
        expected = () if len(shape) == 1 else (shape[0],)
        if targets.shape != expected:
            raise AutodiffError(f"targets of shape {targets.shape} do not match logits {shape}")
        if not np.issubdtype(targets.dtype, np.integer):
            raise AutodiffError("class indices must be integers")
        if np.any(targets < 0) or np.any(targets >= shape[-1]):
            raise AutodiffError(f"class index out of range for {shape[-1]} classes")
        return ()

    def forward(self, inputs, attrs):
        logits = inputs[0]
        target = np.asarray(attrs["target"])
        lse = logsumexp(logits, axis=-1)
        if logits.ndim == 1:
            loss = lse - logits[int(target)]
        else:
            loss = np.mean(lse - logits[np.arange(logits.shape[0]), target])
        probabilities = np.exp(logits - np.expand_dims(lse, -1))
        return np.asarray(max(float(loss), 0.0), dtype=np.float64), probabilities

    def backward(self, grad, inputs, value, saved, attrs):
        logits = inputs[0]
        target = np.asarray(attrs["target"])
        delta = saved.copy()
        if logits.ndim == 1:
            delta[int(target)] -= 1.0
        else:
            delta[np.arange(logits.shape[0]), target] -= 1.0
            delta /= logits.shape[0]
        return [delta * float(grad)]


def leaky_relu(x, slope: float) -> DenseArray:
    """Elementwise ``x if x >= 0 else slope * x``."""

    op = _REGISTRY["leaky_relu"]
    array = as_dense(x, name="x")
    attrs = {"slope": slope}
    op.infer_shape([array.shape], attrs)
    return op.forward([array], attrs)[0]


def leaky_relu_grad(x, slope: float) -> DenseArray:
    op = _REGISTRY["leaky_relu"]
    array = as_dense(x, name="x")
    attrs = {"slope": slope}
    op.infer_shape([array.shape], attrs)
    value, saved = op.forward([array], attrs)
    return op.backward(np.ones_like(array), [array], value, saved, attrs)[0]


def softmax_cross_entropy(logits, true_class: int) -> float:
    """``-log softmax(logits)[true_class]`` for a single logit vector."""

    op = _REGISTRY["softmax_cross_entropy"]
    array = as_dense(logits, name="logits")
    attrs = {"target": np.int64(true_class)}
    op.infer_shape([array.shape], attrs)
    return float(op.forward([array], attrs)[0])


def softmax(logits, axis: int = -1) -> DenseArray:
    return _softmax(as_dense(logits, name="logits"), axis=axis)


__all__ = [
    "NeighborFn",
    "Operation",
    "get_operation",
    "leaky_relu",
    "leaky_relu_grad",
    "register",
    "registered_kinds",
    "softmax",
    "softmax_cross_entropy",
]
