"""Reverse-mode autodiff over float64 numpy arrays.

Deliberately small: just the operations needed by 1-D convolutional
autoencoders and fully-connected heads. Graphs are single-use; calling
``backward()`` releases the recorded tape. Gradients accumulate into
``Parameter.grad`` (pre-allocated, zeroed by the optimizer after each step),
so several backward passes can contribute to one update.

There is no global tape or other shared mutable state, so independent models
can run on separate threads.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError, StateError


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """A float64 ndarray plus the bookkeeping needed for backprop."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward_fn = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def backward(self):
        """Backpropagate from a scalar; populates .grad along the active path."""
        if self._backward_fn is None:
            raise StateError("backward() requires a recorded forward computation")
        if self.data.size != 1:
            raise DimensionError(
                f"backward() starts from a scalar, got shape {self.data.shape}"
            )
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward_fn is not None:
                node._backward_fn()
        # Single-use tape: drop references so activations can be collected.
        for node in topo:
            if not isinstance(node, Parameter):
                node._parents = ()
                node._backward_fn = None
                if node is not self:
                    node.grad = None

    # -- operator sugar -------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, mul(_wrap(other), -1.0))

    def __rsub__(self, other):
        return add(_wrap(other), mul(self, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("tensor/tensor division is not supported; multiply by a reciprocal")
        return mul(self, 1.0 / float(other))

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self):
        return sum_all(self)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


class Parameter(Tensor):
    """A trainable leaf tensor carrying its Adam moment estimates."""

    __slots__ = ("adam_m", "adam_v", "step_count")

    def __init__(self, data):
        super().__init__(data, requires_grad=True)
        self.grad = np.zeros_like(self.data)
        self.adam_m = np.zeros_like(self.data)
        self.adam_v = np.zeros_like(self.data)
        self.step_count = 0

    def __repr__(self):
        return f"Parameter(shape={self.data.shape}, steps={self.step_count})"


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data: np.ndarray, parents: tuple, backward_fn) -> Tensor:
    """Create a graph node; plain (non-grad) inputs record no tape."""
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward_fn = backward_fn
    return out


def accumulate_grad(t: Tensor, g: np.ndarray):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros(t.data.shape)
    t.grad += g


# -- elementwise and linear algebra -------------------------------------


def add(a, b):
    a, b = _wrap(a), _wrap(b)
    out_data = a.data + b.data

    def bwd():
        g = out.grad
        accumulate_grad(a, _unbroadcast(g, a.data.shape))
        accumulate_grad(b, _unbroadcast(g, b.data.shape))

    out = _node(out_data, (a, b), bwd)
    return out


def mul(a, b):
    a, b = _wrap(a), _wrap(b)
    out_data = a.data * b.data

    def bwd():
        g = out.grad
        accumulate_grad(a, _unbroadcast(g * b.data, a.data.shape))
        accumulate_grad(b, _unbroadcast(g * a.data, b.data.shape))

    out = _node(out_data, (a, b), bwd)
    return out


def matmul(a: Tensor, b: Tensor):
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise DimensionError("matmul operands must be at least 2-D; reshape 1-D inputs")
    out_data = a.data @ b.data

    def bwd():
        g = out.grad
        if a.requires_grad:
            ga = g @ np.swapaxes(b.data, -1, -2)
            accumulate_grad(a, _unbroadcast(ga, a.data.shape))
        if b.requires_grad:
            gb = np.swapaxes(a.data, -1, -2) @ g
            accumulate_grad(b, _unbroadcast(gb, b.data.shape))

    out = _node(out_data, (a, b), bwd)
    return out


def reshape(t: Tensor, shape):
    out_data = t.data.reshape(shape)

    def bwd():
        accumulate_grad(t, out.grad.reshape(t.data.shape))

    out = _node(out_data, (t,), bwd)
    return out


def narrow(t: Tensor, axis: int, start: int, length: int):
    """Contiguous slice of `length` elements along `axis`."""
    index = [slice(None)] * t.data.ndim
    index[axis] = slice(start, start + length)
    index = tuple(index)
    out_data = t.data[index]

    def bwd():
        g = np.zeros(t.data.shape)
        g[index] = out.grad
        accumulate_grad(t, g)

    out = _node(out_data, (t,), bwd)
    return out


def concat(tensors, axis: int):
    tensors = [_wrap(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)

    def bwd():
        g = out.grad
        offset = 0
        for t in tensors:
            n = t.data.shape[axis]
            index = [slice(None)] * g.ndim
            index[axis] = slice(offset, offset + n)
            accumulate_grad(t, g[tuple(index)])
            offset += n

    out = _node(out_data, tuple(tensors), bwd)
    return out


def sum_all(t: Tensor):
    out_data = np.asarray(t.data.sum())

    def bwd():
        accumulate_grad(t, np.broadcast_to(out.grad, t.data.shape).copy())

    out = _node(out_data, (t,), bwd)
    return out


def linear(x: Tensor, weight: Tensor, bias=None) -> Tensor:
    """Affine map x @ weight.T + bias with weight laid out (out, in)."""
    if x.data.ndim != 2:
        raise DimensionError(f"linear expects a (batch, features) input, got {x.data.shape}")
    if x.data.shape[1] != weight.data.shape[1]:
        raise DimensionError(
            f"linear feature axis mismatch: input has {x.data.shape[1]}, "
            f"weight expects {weight.data.shape[1]}"
        )
    out_data = x.data @ weight.data.T
    if bias is not None:
        out_data += bias.data

    def bwd():
        g = out.grad
        if x.requires_grad:
            accumulate_grad(x, g @ weight.data)
        accumulate_grad(weight, g.T @ x.data)
        if bias is not None:
            accumulate_grad(bias, g.sum(axis=0))

    parents = (x, weight) if bias is None else (x, weight, bias)
    out = _node(out_data, parents, bwd)
    return out


# -- activations ---------------------------------------------------------


def relu(t: Tensor):
    mask = t.data > 0
    out_data = np.where(mask, t.data, 0.0)

    def bwd():
        accumulate_grad(t, out.grad * mask)

    out = _node(out_data, (t,), bwd)
    return out


def leaky_relu(t: Tensor, negative_slope: float = 0.01):
    scale = np.where(t.data > 0, 1.0, negative_slope)
    out_data = t.data * scale

    def bwd():
        accumulate_grad(t, out.grad * scale)

    out = _node(out_data, (t,), bwd)
    return out


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    mean: np.ndarray,
    var: np.ndarray,
    eps: float,
    stats_from_batch: bool,
):
    """Normalize with the given statistics, then scale and shift per channel.

    `mean`/`var` are plain arrays already broadcast-shaped. When
    `stats_from_batch` is true they were computed from `x` and the backward
    pass accounts for that dependence; otherwise they are treated as
    constants (inference with running statistics).
    """
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean) * inv
    bshape = gamma.data.shape if xhat.ndim == 2 else (1, gamma.data.size, 1)
    g_b = gamma.data.reshape(bshape)
    out_data = g_b * xhat + beta.data.reshape(bshape)

    reduce_axes = (0,) if xhat.ndim == 2 else (0, 2)

    def bwd():
        g = out.grad
        accumulate_grad(beta, g.sum(axis=reduce_axes).reshape(beta.data.shape))
        accumulate_grad(gamma, (g * xhat).sum(axis=reduce_axes).reshape(gamma.data.shape))
        if x.requires_grad:
            if stats_from_batch:
                m1 = g.mean(axis=reduce_axes, keepdims=True)
                m2 = (g * xhat).mean(axis=reduce_axes, keepdims=True)
                gx = g_b * inv * (g - m1 - xhat * m2)
            else:
                gx = g_b * inv * g
            accumulate_grad(x, gx)

    out = _node(out_data, (x, gamma, beta), bwd)
    return out
