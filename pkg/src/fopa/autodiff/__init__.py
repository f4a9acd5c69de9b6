"""Minimal float64 tensor library with reverse-mode differentiation."""

from . import ops
from .gradcheck import analytic_grads, finite_difference_grads, max_relative_error
from .tensor import (
    ContractError,
    DimensionError,
    Graph,
    Node,
    Tensor,
    as_tensor,
    backward,
    grad_enabled,
    no_grad,
    set_debug,
    zero_grads,
)

__all__ = [
    "ContractError",
    "DimensionError",
    "Graph",
    "Node",
    "Tensor",
    "as_tensor",
    "backward",
    "analytic_grads",
    "finite_difference_grads",
    "grad_enabled",
    "max_relative_error",
    "no_grad",
    "ops",
    "set_debug",
    "zero_grads",
]
