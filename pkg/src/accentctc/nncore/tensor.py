"""Reverse-mode autodiff over dense float64 numpy arrays.

Graphs are built define-by-run: every operation returns a new ``Tensor``
holding its value, its parent nodes and a closure that routes gradients to
those parents. ``backward()`` on a scalar node runs one reverse topological
sweep. Nothing is mutated in place, so the same inputs always reproduce the
same forward values and the same gradients bit for bit.

The one non-standard node is :func:`gradient_reversal`, an identity in the
forward pass that multiplies the incoming gradient by a fixed coefficient on
the way back (-1 for adversarial training, +1 for plain multi-task routing).
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import ContractError, NumericError, ShapeError

Array = np.ndarray

# When False (see no_grad), ops return detached values and build no graph.
_GRAD_ENABLED = True
# Opt-in per-op finiteness checking; expensive, used by tests and debugging.
_CHECK_FINITE = False


@contextmanager
def no_grad():
    """Disable graph construction inside the block (evaluation mode)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def set_debug_checks(enabled: bool) -> None:
    """Toggle per-op finiteness verification of every produced value."""
    global _CHECK_FINITE
    _CHECK_FINITE = bool(enabled)


class Tensor:
    """A node of the autodiff graph: a float64 array plus backward plumbing.

    Attributes:
        data: the node's value, a dense ``np.float64`` array.
        grad: accumulated gradient, same shape as ``data``; ``None`` until a
            backward sweep reaches this node.
        requires_grad: whether gradients should flow to or through this node.
    """

    __slots__ = ("data", "grad", "requires_grad", "op", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, op: str = "leaf"):
        self.data: Array = np.asarray(data, dtype=np.float64)
        self.grad: Array | None = None
        self.requires_grad = bool(requires_grad)
        self.op = op
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[Array], None] | None = None

    # ---- introspection -------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"Tensor(op={self.op}, shape={self.shape}, requires_grad={self.requires_grad})"

    # ---- gradient bookkeeping -------------------------------------------
    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: Array) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self) -> None:
        """Reverse sweep seeding this scalar node with gradient 1.

        Raises ContractError if the node is not a scalar (size != 1).
        """
        if self.size != 1:
            raise ContractError(f"backward() root must be scalar, got shape {self.shape}")
        order = _topo_order(self)
        self._accumulate(np.ones_like(self.data))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # ---- arithmetic ------------------------------------------------------
    def __add__(self, other) -> "Tensor":
        return add(self, other)

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        return _make(-self.data, (self,), lambda g, out: (-g,), "neg")

    def __sub__(self, other) -> "Tensor":
        return add(self, -_as_tensor(other))

    def __rsub__(self, other) -> "Tensor":
        return add(-self, other)

    def __mul__(self, other) -> "Tensor":
        return mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other) -> "Tensor":
        return matmul(self, other)

    def __pow__(self, exponent: float) -> "Tensor":
        return pow_const(self, exponent)

    # ---- shaping and reductions ------------------------------------------
    def reshape(self, *shape: int) -> "Tensor":
        orig = self.data.shape
        return _make(
            self.data.reshape(shape),
            (self,),
            lambda g, out: (g.reshape(orig),),
            "reshape",
        )

    def swapaxes(self, a: int, b: int) -> "Tensor":
        return _make(
            np.swapaxes(self.data, a, b),
            (self,),
            lambda g, out: (np.swapaxes(g, a, b),),
            "swapaxes",
        )

    def sum(self, axis: int | None = None, keepdims: bool = False) -> "Tensor":
        return sum_over(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | None = None, keepdims: bool = False) -> "Tensor":
        return mean_over(self, axis=axis, keepdims=keepdims)

    # ---- nonlinearities ----------------------------------------------------
    def relu(self) -> "Tensor":
        return relu(self)

    def exp(self) -> "Tensor":
        return exp(self)

    def log(self) -> "Tensor":
        return log(self)

    def softmax(self) -> "Tensor":
        return softmax(self)

    def log_softmax(self) -> "Tensor":
        return log_softmax(self)

    def clamp_min(self, floor: float) -> "Tensor":
        return clamp_min(self, floor)


# ---------------------------------------------------------------------------
# graph machinery
# ---------------------------------------------------------------------------


def _topo_order(root: Tensor) -> list[Tensor]:
    """Iterative post-order DFS; deterministic for a fixed graph."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(
    data: Array,
    parents: Sequence[Tensor],
    grad_fn: Callable[..., tuple[Array | None, ...]],
    op: str,
) -> Tensor:
    """Build an op node. grad_fn(upstream, out_data) -> one grad per parent."""
    if _CHECK_FINITE and not np.all(np.isfinite(data)):
        raise NumericError(f"non-finite value produced by op '{op}'")
    needs = _GRAD_ENABLED and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=needs, op=op)
    if needs:
        out._parents = tuple(parents)

        def _backward(g: Array, _parents=out._parents, _fn=grad_fn, _data=data):
            grads = _fn(g, _data)
            for parent, pg in zip(_parents, grads):
                if pg is not None and parent.requires_grad:
                    parent._accumulate(pg)

        out._backward = _backward
    return out


def _unbroadcast(g: Array, shape: tuple[int, ...]) -> Array:
    """Sum gradient g down to `shape` (inverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    axes = tuple(i for i, (gs, ts) in enumerate(zip(g.shape, shape)) if ts == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# primitive ops
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    return _make(
        a.data + b.data,
        (a, b),
        lambda g, out: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)),
        "add",
    )


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    return _make(
        a.data * b.data,
        (a, b),
        lambda g, out: (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        ),
        "mul",
    )


def matmul(a, b) -> Tensor:
    """Matrix product; batched on leading axes via numpy matmul rules.

    Both operands must have ndim >= 2 (reshape vectors first).
    """
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} @ {b.shape}")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeError(f"matmul inner dims differ: {a.shape} @ {b.shape}")

    def grad_fn(g, out):
        ga = gb = None
        if a.requires_grad:
            ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.data.shape)
        if b.requires_grad:
            gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.data.shape)
        return ga, gb

    return _make(np.matmul(a.data, b.data), (a, b), grad_fn, "matmul")


def pow_const(x: Tensor, p: float) -> Tensor:
    x = _as_tensor(x)
    return _make(
        x.data**p,
        (x,),
        lambda g, out: (g * p * x.data ** (p - 1),),
        "pow",
    )


def relu(x) -> Tensor:
    x = _as_tensor(x)
    mask = x.data > 0.0
    return _make(np.where(mask, x.data, 0.0), (x,), lambda g, out: (g * mask,), "relu")


def exp(x) -> Tensor:
    x = _as_tensor(x)
    return _make(np.exp(x.data), (x,), lambda g, out: (g * out,), "exp")


def log(x) -> Tensor:
    x = _as_tensor(x)
    return _make(np.log(x.data), (x,), lambda g, out: (g / x.data,), "log")


def clamp_min(x, floor: float) -> Tensor:
    x = _as_tensor(x)
    mask = x.data > floor
    return _make(np.maximum(x.data, floor), (x,), lambda g, out: (g * mask,), "clamp_min")


def sum_over(x, axis: int | None = None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    shape = x.data.shape

    def grad_fn(g, out):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis=axis)
        return (np.broadcast_to(g, shape),)

    return _make(x.data.sum(axis=axis, keepdims=keepdims), (x,), grad_fn, "sum")


def mean_over(x, axis: int | None = None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    n = x.data.size if axis is None else x.data.shape[axis]
    return mul(sum_over(x, axis=axis, keepdims=keepdims), 1.0 / n)


def broadcast_to(x, shape: tuple[int, ...]) -> Tensor:
    x = _as_tensor(x)
    return _make(
        np.broadcast_to(x.data, shape).copy(),
        (x,),
        lambda g, out: (_unbroadcast(g, x.data.shape),),
        "broadcast",
    )


def concat(tensors: Iterable[Tensor], axis: int = -1) -> Tensor:
    """Concatenate along `axis`; all other dims must match exactly."""
    ts = [_as_tensor(t) for t in tensors]
    ref = ts[0].data.shape
    ax = axis if axis >= 0 else ts[0].ndim + axis
    for t in ts[1:]:
        other = t.data.shape
        if len(other) != len(ref) or any(
            other[i] != ref[i] for i in range(len(ref)) if i != ax
        ):
            raise ShapeError(f"concat requires matching dims off axis {axis}: {ref} vs {other}")
    widths = [t.data.shape[ax] for t in ts]
    splits = np.cumsum(widths)[:-1]

    def grad_fn(g, out):
        return tuple(np.split(g, splits, axis=ax))

    return _make(np.concatenate([t.data for t in ts], axis=ax), ts, grad_fn, "concat")


def softmax(x) -> Tensor:
    """Softmax over the last axis, computed with max subtraction."""
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)

    def grad_fn(g, out):
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return _make(s, (x,), grad_fn, "softmax")


def log_softmax(x) -> Tensor:
    """Stable log(softmax(x)) over the last axis."""
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    ls = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))

    def grad_fn(g, out):
        return (g - np.exp(ls) * g.sum(axis=-1, keepdims=True),)

    return _make(ls, (x,), grad_fn, "log_softmax")


def layer_norm(x, eps: float = 1e-12) -> Tensor:
    """Normalize the last axis to mean 0, population variance 1."""
    x = _as_tensor(x)
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    std = np.sqrt(var + eps)
    y = (x.data - mu) / std

    def grad_fn(g, out):
        gm = g.mean(axis=-1, keepdims=True)
        gym = (g * y).mean(axis=-1, keepdims=True)
        return ((g - gm - y * gym) / std,)

    return _make(y, (x,), grad_fn, "layer_norm")


def gradient_reversal(x: Tensor, coefficient: float) -> Tensor:
    """Identity forward; backward multiplies the incoming gradient by
    `coefficient`. Adversarial routing uses -1, cooperative routing +1."""
    x = _as_tensor(x)
    c = float(coefficient)
    return _make(x.data.copy(), (x,), lambda g, out: (c * g,), "grl")


# ---------------------------------------------------------------------------
# gather / scatter ops
# ---------------------------------------------------------------------------


def embedding_lookup(table: Tensor, ids: np.ndarray) -> Tensor:
    """Select rows `ids` from an (N, D) table; grads hit only those rows."""
    ids = np.asarray(ids, dtype=np.intp)
    if ids.size and (ids.min() < 0 or ids.max() >= table.data.shape[0]):
        raise ShapeError(f"row index out of range for table with {table.data.shape[0]} rows")

    def grad_fn(g, out):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids, g)
        return (gt,)

    return _make(table.data[ids], (table,), grad_fn, "embedding_lookup")


def take_along_last(x: Tensor, idx: np.ndarray) -> Tensor:
    """Pick x[i, idx[i]] for a 2-D tensor; returns a vector of length B."""
    x = _as_tensor(x)
    idx = np.asarray(idx, dtype=np.intp)
    if x.ndim != 2 or idx.ndim != 1 or idx.shape[0] != x.data.shape[0]:
        raise ShapeError(f"take_along_last expects (B, N) and (B,), got {x.shape}, {idx.shape}")
    rows = np.arange(x.data.shape[0])

    def grad_fn(g, out):
        gx = np.zeros_like(x.data)
        gx[rows, idx] = g
        return (gx,)

    return _make(x.data[rows, idx], (x,), grad_fn, "take_along_last")


# ---------------------------------------------------------------------------
# time-axis ops used by the convolutional front end
# ---------------------------------------------------------------------------


def unfold_time(x: Tensor, kernel: int) -> Tensor:
    """Stack a zero-padded window of `kernel` frames around every time step.

    Input (..., T, F) becomes (..., T, kernel*F); odd kernels keep the output
    aligned with the input ("same" padding).
    """
    x = _as_tensor(x)
    if kernel % 2 != 1:
        raise ContractError(f"unfold_time kernel must be odd, got {kernel}")
    t = x.data.shape[-2]
    half = kernel // 2
    pad = [(0, 0)] * (x.ndim - 2) + [(half, half), (0, 0)]
    padded = np.pad(x.data, pad)
    parts = [padded[..., i : i + t, :] for i in range(kernel)]

    def grad_fn(g, out):
        gsplit = np.split(g, kernel, axis=-1)
        gpad = np.zeros_like(padded)
        for i in range(kernel):
            gpad[..., i : i + t, :] += gsplit[i]
        return (gpad[..., half : half + t, :],)

    return _make(np.concatenate(parts, axis=-1), (x,), grad_fn, "unfold_time")


def maxpool_time(x: Tensor, pool: int) -> Tensor:
    """Max over non-overlapping windows of `pool` frames; trailing remainder
    frames are dropped, so T -> T // pool."""
    x = _as_tensor(x)
    t = x.data.shape[-2]
    t_out = t // pool
    if t_out < 1:
        raise ShapeError(f"maxpool_time needs at least {pool} frames, got {t}")
    lead = x.data.shape[:-2]
    f = x.data.shape[-1]
    windows = x.data[..., : t_out * pool, :].reshape(*lead, t_out, pool, f)
    arg = windows.argmax(axis=-2)
    out = np.take_along_axis(windows, arg[..., None, :], axis=-2).squeeze(-2)

    def grad_fn(g, out_data):
        gw = np.zeros_like(windows)
        np.put_along_axis(gw, arg[..., None, :], g[..., None, :], axis=-2)
        gx = np.zeros_like(x.data)
        gx[..., : t_out * pool, :] = gw.reshape(*lead, t_out * pool, f)
        return (gx,)

    return _make(out, (x,), grad_fn, "maxpool_time")
