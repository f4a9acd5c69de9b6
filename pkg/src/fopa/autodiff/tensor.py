"""Dense float64 tensors with a recorded reverse-mode graph."""

from __future__ import annotations

import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

DEBUG = os.environ.get("FOPA_DEBUG", "") not in ("", "0")

_grad_enabled = True


class DimensionError(ValueError):
    """Raised when tensor shapes disagree along a named axis."""


class ContractError(RuntimeError):
    """Raised when an operation is called outside its contract."""


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


def set_debug(flag: bool) -> None:
    global DEBUG
    DEBUG = flag


class Node:
    """One executed operation: its inputs and a vector-Jacobian closure."""

    __slots__ = ("op", "inputs", "vjp", "released")

    def __init__(self, op: str, inputs: Sequence["Tensor"], vjp: Callable):
        self.op = op
        self.inputs = tuple(inputs)
        self.vjp = vjp
        self.released = False

    def __repr__(self) -> str:
        return f"Node({self.op})"


class Tensor:
    """N-dimensional float64 array that can take part in a differentiation graph.

    ``data`` is always a C-contiguous ``float64`` ndarray.  ``grad`` is ``None``
    until a backward pass reaches the tensor.
    """

    __slots__ = ("data", "requires_grad", "grad", "node", "name")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        name: Optional[str] = None,
    ) -> None:
        self.data = np.ascontiguousarray(np.asarray(data, dtype=np.float64))
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.node: Optional[Node] = None
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"

    def backward(self) -> None:
        backward(self)

    # arithmetic sugar; the ops module owns the definitions
    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import ops

        return ops.scalar_mul(self, -1.0)

    def sum(self, axis=None):
        from . import ops

        return ops.sum(self, axis)

    def reshape(self, *shape):
        from . import ops

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def make_result(
    data: np.ndarray,
    op: str,
    inputs: Sequence[Tensor],
    vjp: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]],
) -> Tensor:
    """Wrap ``data`` as the output of ``op`` and record it when any input needs grad.

    ``vjp`` maps the output gradient to one gradient (or ``None``) per input.
    """
    out = Tensor(data)
    if DEBUG and not np.all(np.isfinite(out.data)):
        if all(np.all(np.isfinite(t.data)) for t in inputs):
            raise FloatingPointError(f"{op} produced non-finite values from finite inputs")
    if _grad_enabled and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.node = Node(op, inputs, vjp)
    return out


@dataclass
class Graph:
    """Topologically ordered record of the operations feeding one output."""

    nodes: list = field(default_factory=list)
    tensors: list = field(default_factory=list)

    @classmethod
    def trace(cls, root: Tensor) -> "Graph":
        graph = cls()
        seen: set[int] = set()
        # iterative post-order DFS; recursion depth would follow network depth
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            t, expanded = stack.pop()
            if t.node is None:
                continue
            if expanded:
                graph.nodes.append(t.node)
                graph.tensors.append(t)
                continue
            if id(t) in seen:
                continue
            seen.add(id(t))
            stack.append((t, True))
            for parent in t.node.inputs:
                if parent.node is not None and id(parent) not in seen:
                    stack.append((parent, False))
        return graph

    def __len__(self) -> int:
        return len(self.nodes)


def backward(loss: Tensor) -> Graph:
    """Accumulate d(loss)/d(t) into ``t.grad`` for every leaf with ``requires_grad``.

    Intermediate gradients are discarded.  The graph is released afterwards, so a
    second call on the same loss raises :class:`ContractError`.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if loss.node is None:
        if loss.requires_grad:
            loss.grad = np.ones_like(loss.data) if loss.grad is None else loss.grad + 1.0
            return Graph()
        raise ContractError("loss does not depend on any tensor that requires grad")
    if loss.node.released:
        raise ContractError("graph already consumed by a previous backward(); rerun the forward pass")

    graph = Graph.trace(loss)
    pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for t in reversed(graph.tensors):
        node = t.node
        g = pending.pop(id(t), None)
        if g is None:
            node.released = True
            continue
        in_grads = node.vjp(g)
        for parent, pg in zip(node.inputs, in_grads):
            if pg is None or not parent.requires_grad:
                continue
            if parent.node is None:
                parent.grad = pg.copy() if parent.grad is None else parent.grad + pg
            else:
                key = id(parent)
                pending[key] = pg if key not in pending else pending[key] + pg
        node.vjp = _released_vjp
        node.released = True
    return graph


def _released_vjp(g):
    raise ContractError("graph already consumed")


def zero_grads(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None
