"""Reverse-mode automatic differentiation over dense float64 arrays."""

from .arrays import AutodiffError, DenseArray, as_dense
from .gradcheck import check_gradients, numerical_gradient, relative_error
from .graph import ComputeGraph, Node, NodeId, evaluate, evaluate_with_gradients
from .ops import leaky_relu, leaky_relu_grad, softmax, softmax_cross_entropy
from .optim import Adam, AdamState, adam_step
from .serialization import load_weights, pack_weights, save_weights, unpack_weights

__all__ = [
    "Adam",
    "AdamState",
    "AutodiffError",
    "ComputeGraph",
    "DenseArray",
    "Node",
    "NodeId",
    "adam_step",
    "as_dense",
    "check_gradients",
    "evaluate",
    "evaluate_with_gradients",
    "leaky_relu",
    "leaky_relu_grad",
    "load_weights",
    "numerical_gradient",
    "pack_weights",
    "relative_error",
    "save_weights",
    "softmax",
    "softmax_cross_entropy",
    "unpack_weights",
]
