"""A small reverse-mode autodiff over numpy arrays.

Operations only build a graph while a :class:`Tape` is active; outside a
tape they are plain numpy calls, which is what inference uses. Nodes are
recorded in creation order, so walking the tape backwards visits every
node after all of its consumers.

Shapes must match exactly, with one exception: ``add`` accepts a 1-D bias
matching the trailing dimension. Anything else is expanded explicitly.
"""
from __future__ import annotations

import numpy as np

from ..errors import InvalidArgument, InvalidState

_tapes: list["Tape"] = []


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "parents", "backward_fn", "name")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self.parents = ()
        self.backward_fn = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.data.shape})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


class Tape:
    """Records the forward pass; ``backward`` fills ``.grad`` on leaves."""

    def __init__(self):
        self.nodes: list[Tensor] = []

    def __enter__(self):
        _tapes.append(self)
        return self

    def __exit__(self, *exc):
        _tapes.remove(self)
        return False

    def backward(self, loss: Tensor):
        if loss.data.size != 1:
            raise InvalidArgument(f"backward needs a scalar loss, got shape {loss.shape}")
        if not loss.requires_grad:
            return
        loss.grad = np.ones_like(loss.data)
        for node in reversed(self.nodes):
            g = node.grad
            if g is None:
                continue
            grads = node.backward_fn(g)
            for parent, pg in zip(node.parents, grads):
                if pg is None or not parent.requires_grad:
                    continue
                if parent.grad is None:
                    parent.grad = np.array(pg, dtype=np.float64)
                else:
                    parent.grad = parent.grad + pg
            node.grad = None   # intermediate; only leaves keep gradients
        self.nodes.clear()


def current_tape():
    return _tapes[-1] if _tapes else None


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data, parents, backward_fn):
    out = Tensor(data)
    tape = current_tape()
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.parents = parents
        out.backward_fn = backward_fn
        tape.nodes.append(out)
    return out


# ---------------------------------------------------------------- elementwise

def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape == b.shape:
        return _node(a.data + b.data, (a, b), lambda g: (g, g))
    if b.data.ndim == 1 and a.shape[-1:] == b.shape:
        lead = tuple(range(a.data.ndim - 1))
        return _node(a.data + b.data, (a, b), lambda g: (g, g.sum(axis=lead)))
    raise InvalidArgument(f"add: incompatible shapes {a.shape} and {b.shape}")


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise InvalidArgument(f"sub: shapes differ {a.shape} vs {b.shape}")
    return _node(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise InvalidArgument(f"mul: shapes differ {a.shape} vs {b.shape}")
    ad, bd = a.data, b.data
    return _node(ad * bd, (a, b), lambda g: (g * bd, g * ad))


def scale(a, c: float):
    a = as_tensor(a)
    return _node(a.data * c, (a,), lambda g: (g * c,))


def square(a):
    a = as_tensor(a)
    ad = a.data
    return _node(ad * ad, (a,), lambda g: (2.0 * g * ad,))


def tanh(a):
    a = as_tensor(a)
    y = np.tanh(a.data)
    return _node(y, (a,), lambda g: (g * (1.0 - y * y),))


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid(a):
    a = as_tensor(a)
    y = _sigmoid(a.data)
    return _node(y, (a,), lambda g: (g * y * (1.0 - y),))


def relu(a):
    a = as_tensor(a)
    pos = a.data > 0
    return _node(np.where(pos, a.data, 0.0), (a,), lambda g: (g * pos,))


# ---------------------------------------------------------------- structure

def matmul(x, w):
    """(..., k) @ (k, j) -> (..., j)."""
    x, w = as_tensor(x), as_tensor(w)
    if w.data.ndim != 2 or x.shape[-1] != w.shape[0]:
        raise InvalidArgument(f"matmul: incompatible shapes {x.shape} and {w.shape}")
    xd, wd = x.data, w.data

    def back(g):
        gx = g @ wd.T
        gw = xd.reshape(-1, xd.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        return gx, gw

    return _node(xd @ wd, (x, w), back)


def concat(parts, axis=-1):
    parts = [as_tensor(p) for p in parts]
    axis = axis % parts[0].data.ndim
    sizes = [p.shape[axis] for p in parts]
    cuts = np.cumsum(sizes)[:-1]
    return _node(np.concatenate([p.data for p in parts], axis=axis), tuple(parts),
                 lambda g: tuple(np.split(g, cuts, axis=axis)))


def expand(a, axis: int, size: int):
    """Insert a new axis and repeat ``size`` times along it."""
    a = as_tensor(a)
    y = np.repeat(np.expand_dims(a.data, axis), size, axis=axis)
    return _node(y, (a,), lambda g: (g.sum(axis=axis),))


def reshape(a, shape):
    a = as_tensor(a)
    old = a.shape
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def sum(a, axis=None):  # noqa: A001 - mirrors numpy
    a = as_tensor(a)
    shape = a.shape

    def back(g):
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return _node(a.data.sum(axis=axis), (a,), back)


def mean(a, axis=None):
    a = as_tensor(a)
    count = a.data.size if axis is None else a.shape[axis]
    return scale(sum(a, axis), 1.0 / count)


def gather(a, index):
    """Row ``index[b]`` of batch item b: (B, n, ...) -> (B, ...)."""
    a = as_tensor(a)
    index = np.asarray(index, dtype=np.int64)
    rows = np.arange(a.shape[0])
    shape = a.shape

    def back(g):
        out = np.zeros(shape)
        np.add.at(out, (rows, index), g)
        return (out,)

    return _node(a.data[rows, index], (a,), back)


def attend(weights, values):
    """Weighted sum over the set axis: (B, n) x (B, n, E) -> (B, E)."""
    w, v = as_tensor(weights), as_tensor(values)
    wd, vd = w.data, v.data
    return _node(np.einsum("bn,bne->be", wd, vd), (w, v),
                 lambda g: (np.einsum("be,bne->bn", g, vd), wd[:, :, None] * g[:, None, :]))


# ---------------------------------------------------------------- softmax

def _check_mask(mask, shape):
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != shape:
        raise InvalidArgument(f"mask shape {mask.shape} does not match {shape}")
    if not np.all(mask.any(axis=-1)):
        raise InvalidState("softmax over a fully masked row")
    return mask


def _softmax_np(x, mask=None):
    if mask is not None:
        x = np.where(mask, x, -np.inf)
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax(a, mask=None):
    """Softmax over the last axis; entries where ``mask`` is False get exactly 0.

    The mask follows the 1 = available / 0 = taken convention.
    """
    a = as_tensor(a)
    if mask is not None:
        mask = _check_mask(mask, a.shape)
    p = _softmax_np(a.data, mask)

    def back(g):
        return (p * (g - (g * p).sum(axis=-1, keepdims=True)),)

    return _node(p, (a,), back)


def log_softmax(a, mask=None):
    """Log-probabilities over the last axis; masked entries are -inf."""
    a = as_tensor(a)
    x = a.data
    if mask is not None:
        mask = _check_mask(mask, a.shape)
        x = np.where(mask, x, -np.inf)
    z = x - x.max(axis=-1, keepdims=True)
    with np.errstate(divide="ignore"):
        lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    y = z - lse
    p = np.exp(y)

    def back(g):
        g = np.where(np.isfinite(y), g, 0.0)
        return (g - p * g.sum(axis=-1, keepdims=True),)

    return _node(y, (a,), back)
