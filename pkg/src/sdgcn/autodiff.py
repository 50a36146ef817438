"""Reverse-mode automatic differentiation over dense float64 arrays.

Every tensor in the model is a :class:`DiffNode`: a value, a same-shape
gradient accumulator, and links to the nodes that produced it. Operations
build the graph eagerly; :func:`backward` walks it once in reverse
topological order and accumulates gradients into the leaves.

All arrays are 2-D, row-major, double precision. Elementwise add/mul accept
one broadcast form besides equal shapes: an operand with extent 1 along one
axis (a bias column broadcast across columns, or a weight row broadcast
across rows); the gradient is summed back over the broadcast axis.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DegenerateInputError, ShapeError
from .rng import RngStream


class DiffNode:
    """A node of the differentiation graph: value, grad slot, and provenance."""

    __slots__ = ("value", "grad", "parents", "op", "_backward")

    def __init__(
        self,
        value: np.ndarray,
        parents: tuple["DiffNode", ...] = (),
        op: str = "leaf",
        backward: Callable[["DiffNode"], None] | None = None,
    ):
        self.value = value
        self.grad = np.zeros_like(value)
        self.parents = parents
        self.op = op
        self._backward = backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:
        return f"DiffNode(op={self.op!r}, shape={self.value.shape})"


def constant(value) -> DiffNode:
    """Leaf node for a fixed array; participates in the graph but is not a parameter."""
    arr = np.ascontiguousarray(value, dtype=np.float64)
    if arr.ndim != 2:
        arr = np.atleast_2d(arr)
    return DiffNode(arr, op="const")


def _require_2d(name: str, node: DiffNode) -> None:
    if node.value.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {node.value.shape}", node.value.shape)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` back down to `shape` after a broadcast forward op."""
    if grad.shape == shape:
        return grad
    out = grad
    for axis in range(len(shape)):
        if shape[axis] == 1 and out.shape[axis] != 1:
            out = out.sum(axis=axis, keepdims=True)
    return out


def _check_elementwise(opname: str, a: DiffNode, b: DiffNode) -> None:
    _require_2d(opname, a)
    _require_2d(opname, b)
    for ax in (0, 1):
        if a.shape[ax] != b.shape[ax] and a.shape[ax] != 1 and b.shape[ax] != 1:
            raise ShapeError(
                f"{opname}: incompatible shapes {a.shape} and {b.shape}", a.shape, b.shape
            )


def matmul(a: DiffNode, b: DiffNode) -> DiffNode:
    """Matrix product; backward: a.grad += g·bT, b.grad += aT·g."""
    _require_2d("matmul lhs", a)
    _require_2d("matmul rhs", b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"matmul: inner dimensions disagree, {a.shape} vs {b.shape}", a.shape, b.shape
        )

    def bwd(out: DiffNode) -> None:
        a.grad += out.grad @ b.value.T
        b.grad += a.value.T @ out.grad

    return DiffNode(a.value @ b.value, (a, b), "matmul", bwd)


def add(a: DiffNode, b: DiffNode) -> DiffNode:
    _check_elementwise("add", a, b)

    def bwd(out: DiffNode) -> None:
        a.grad += _unbroadcast(out.grad, a.shape)
        b.grad += _unbroadcast(out.grad, b.shape)

    return DiffNode(a.value + b.value, (a, b), "add", bwd)


def mul(a: DiffNode, b: DiffNode) -> DiffNode:
    _check_elementwise("mul", a, b)

    def bwd(out: DiffNode) -> None:
        a.grad += _unbroadcast(out.grad * b.value, a.shape)
        b.grad += _unbroadcast(out.grad * a.value, b.shape)

    return DiffNode(a.value * b.value, (a, b), "mul", bwd)


def scale(a: DiffNode, factor: float) -> DiffNode:
    """Multiply by a python scalar constant."""
    factor = float(factor)

    def bwd(out: DiffNode) -> None:
        a.grad += factor * out.grad

    return DiffNode(factor * a.value, (a,), "scale", bwd)


def tanh(a: DiffNode) -> DiffNode:
    val = np.tanh(a.value)

    def bwd(out: DiffNode) -> None:
        a.grad += (1.0 - val * val) * out.grad

    return DiffNode(val, (a,), "tanh", bwd)


def sigmoid(a: DiffNode) -> DiffNode:
    val = 1.0 / (1.0 + np.exp(-a.value))

    def bwd(out: DiffNode) -> None:
        a.grad += val * (1.0 - val) * out.grad

    return DiffNode(val, (a,), "sigmoid", bwd)


def relu(a: DiffNode) -> DiffNode:
    # Gradient passes where input > 0; zero at and below 0.
    val = np.maximum(a.value, 0.0)

    def bwd(out: DiffNode) -> None:
        a.grad += (a.value > 0.0) * out.grad

    return DiffNode(val, (a,), "relu", bwd)


def log(a: DiffNode) -> DiffNode:
    def bwd(out: DiffNode) -> None:
        a.grad += out.grad / a.value

    return DiffNode(np.log(a.value), (a,), "log", bwd)


def transpose(a: DiffNode) -> DiffNode:
    _require_2d("transpose", a)

    def bwd(out: DiffNode) -> None:
        a.grad += out.grad.T

    return DiffNode(np.ascontiguousarray(a.value.T), (a,), "transpose", bwd)


def sum_all(a: DiffNode) -> DiffNode:
    """Sum of all entries as a 1x1 node."""

    def bwd(out: DiffNode) -> None:
        a.grad += out.grad[0, 0]

    return DiffNode(np.array([[a.value.sum()]]), (a,), "sum_all", bwd)


def concat_rows(nodes: Sequence[DiffNode]) -> DiffNode:
    """Stack nodes vertically; all must share the same column count."""
    nodes = tuple(nodes)
    cols = nodes[0].shape[1]
    for n in nodes:
        _require_2d("concat_rows", n)
        if n.shape[1] != cols:
            raise ShapeError(
                f"concat_rows: column counts differ, {nodes[0].shape} vs {n.shape}",
                nodes[0].shape,
                n.shape,
            )

    def bwd(out: DiffNode) -> None:
        r = 0
        for n in nodes:
            n.grad += out.grad[r : r + n.shape[0], :]
            r += n.shape[0]

    return DiffNode(np.concatenate([n.value for n in nodes], axis=0), nodes, "concat_rows", bwd)


def concat_cols(nodes: Sequence[DiffNode]) -> DiffNode:
    """Stack nodes horizontally; all must share the same row count."""
    nodes = tuple(nodes)
    rows = nodes[0].shape[0]
    for n in nodes:
        _require_2d("concat_cols", n)
        if n.shape[0] != rows:
            raise ShapeError(
                f"concat_cols: row counts differ, {nodes[0].shape} vs {n.shape}",
                nodes[0].shape,
                n.shape,
            )

    def bwd(out: DiffNode) -> None:
        c = 0
        for n in nodes:
            n.grad += out.grad[:, c : c + n.shape[1]]
            c += n.shape[1]

    return DiffNode(np.concatenate([n.value for n in nodes], axis=1), nodes, "concat_cols", bwd)


def col_slice(a: DiffNode, j: int) -> DiffNode:
    """Column j of `a` as a fresh (rows x 1) node."""
    _require_2d("col_slice", a)
    if not 0 <= j < a.shape[1]:
        raise ShapeError(f"col_slice: column {j} out of range for shape {a.shape}", a.shape)

    def bwd(out: DiffNode) -> None:
        a.grad[:, j : j + 1] += out.grad

    return DiffNode(a.value[:, j : j + 1].copy(), (a,), "col_slice", bwd)


def embedding_lookup(table: DiffNode, indices: Sequence[int]) -> DiffNode:
    """Gather rows of `table` (V x d) as columns of the output (d x T).

    Backward scatters gradient back into the gathered rows, accumulating
    over repeated indices.
    """
    _require_2d("embedding_lookup", table)
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1 or idx.size == 0:
        raise ShapeError(f"embedding_lookup: need a non-empty index list, got {idx.shape}")
    if idx.min() < 0 or idx.max() >= table.shape[0]:
        raise ShapeError(
            f"embedding_lookup: index out of range for table with {table.shape[0]} rows"
        )

    def bwd(out: DiffNode) -> None:
        np.add.at(table.grad, idx, out.grad.T)

    return DiffNode(np.ascontiguousarray(table.value[idx].T), (table,), "embedding_lookup", bwd)


def masked_softmax(scores: DiffNode, mask) -> DiffNode:
    """Softmax over a 1xN score row, restricted to positions where mask is true.

    Masked positions get weight exactly 0; unmasked weights sum to 1. The
    exponentials are stabilized by subtracting the max unmasked score.
    """
    _require_2d("masked_softmax", scores)
    if scores.shape[0] != 1:
        raise ShapeError(f"masked_softmax: expected a 1xN row, got {scores.shape}", scores.shape)
    m = np.asarray(mask, dtype=bool).reshape(-1)
    if m.shape[0] != scores.shape[1]:
        raise ShapeError(
            f"masked_softmax: mask length {m.shape[0]} != score count {scores.shape[1]}",
            scores.shape,
        )
    if not m.any():
        raise DegenerateInputError("masked_softmax: mask excludes every position")

    shifted = scores.value[0] - scores.value[0, m].max()
    exp = np.where(m, np.exp(np.where(m, shifted, 0.0)), 0.0)
    val = (exp / exp.sum()).reshape(1, -1)

    def bwd(out: DiffNode) -> None:
        g = out.grad
        scores.grad += val * (g - (g * val).sum())

    return DiffNode(val, (scores,), "masked_softmax", bwd)


def dropout(x: DiffNode, rate: float, training: bool, rng: RngStream) -> DiffNode:
    """Inverted dropout: zero entries with probability `rate` during training
    and scale survivors by 1/(1-rate); identity in eval mode."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)

    def bwd(out: DiffNode) -> None:
        x.grad += keep * out.grad

    return DiffNode(x.value * keep, (x,), "dropout", bwd)


def topo_order(root: DiffNode) -> list[DiffNode]:
    """Nodes reachable from root, parents before children (iterative DFS)."""
    order: list[DiffNode] = []
    seen: set[int] = set()
    stack: list[tuple[DiffNode, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(root: DiffNode) -> None:
    """Seed root with gradient 1 and propagate through the graph once.

    The root must be scalar (a 1x1 node). Gradients accumulate into `.grad`;
    callers zero parameter grads between steps.
    """
    if root.value.size != 1:
        raise ShapeError(f"backward: root must be scalar, got shape {root.shape}", root.shape)
    root.grad[...] = 1.0
    for node in reversed(topo_order(root)):
        if node._backward is not None:
            node._backward(node)
