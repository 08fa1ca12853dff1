"""Layers shared by the distance and ordering networks."""
from __future__ import annotations

import numpy as np

from . import tensor as T
from .params import ParameterStore


def init_gru(store: ParameterStore, prefix: str, in_dim: int, hidden: int, rng):
    fan_in = in_dim + hidden
    for gate in ("z", "r", "h"):
        store.uniform(f"{prefix}.W_{gate}", (fan_in, hidden), fan_in, rng)
        store.zeros(f"{prefix}.b_{gate}", (hidden,))


def gru_step(store: ParameterStore, prefix: str, x, h):
    """One gated recurrent update.

    z = sigmoid([x;h] W_z + b_z), r = sigmoid([x;h] W_r + b_r),
    h_new = tanh([x; r*h] W_h + b_h), returns (1 - z)*h + z*h_new.
    """
    x, h = T.as_tensor(x), T.as_tensor(h)
    xh = T.concat([x, h])
    z = T.sigmoid(T.add(T.matmul(xh, store[f"{prefix}.W_z"]), store[f"{prefix}.b_z"]))
    r = T.sigmoid(T.add(T.matmul(xh, store[f"{prefix}.W_r"]), store[f"{prefix}.b_r"]))
    cand = T.tanh(T.add(T.matmul(T.concat([x, T.mul(r, h)]), store[f"{prefix}.W_h"]),
                        store[f"{prefix}.b_h"]))
    return T.add(h, T.mul(z, T.sub(cand, h)))


def run_gru(store: ParameterStore, prefix: str, seq: np.ndarray, hidden: int):
    """Feed a constant (batch, steps, in) array through the cell; final state."""
    seq = np.asarray(seq, dtype=np.float64)
    h = T.Tensor(np.zeros((seq.shape[0], hidden)))
    for t in range(seq.shape[1]):
        h = gru_step(store, prefix, T.Tensor(seq[:, t]), h)
    return h


def init_dense(store: ParameterStore, prefix: str, in_dim: int, out_dim: int, rng):
    store.uniform(f"{prefix}.W", (in_dim, out_dim), in_dim, rng)
    store.zeros(f"{prefix}.b", (out_dim,))


def dense(store: ParameterStore, prefix: str, x):
    return T.add(T.matmul(x, store[f"{prefix}.W"]), store[f"{prefix}.b"])


def additive_scores(store: ParameterStore, W: str, v: str, items, query):
    """v^T tanh(W [item_i; query]) for every item: (B, n, E) x (B, Q) -> (B, n)."""
    items = T.as_tensor(items)
    n = items.shape[1]
    joint = T.concat([items, T.expand(query, 1, n)])
    hidden = T.tanh(T.matmul(joint, store[W]))
    return T.reshape(T.matmul(hidden, T.reshape(store[v], (-1, 1))), items.shape[:2])
