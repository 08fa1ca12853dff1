"""Named parameter storage, Adam, gradient clipping and JSON persistence."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..errors import DataError, InvalidArgument
from .tensor import Tensor

FORMAT_VERSION = 1


class ParameterStore:
    """Ordered name -> Tensor map with per-parameter Adam moments."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step = 0

    def __getitem__(self, name) -> Tensor:
        return self.params[name]

    def __contains__(self, name):
        return name in self.params

    def __iter__(self):
        return iter(self.params)

    def __len__(self):
        return len(self.params)

    def items(self):
        return self.params.items()

    def add(self, name, value) -> Tensor:
        if name in self.params:
            raise InvalidArgument(f"duplicate parameter name {name!r}")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self.params[name] = t
        return t

    def uniform(self, name, shape, fan_in, rng) -> Tensor:
        bound = 1.0 / math.sqrt(fan_in)
        return self.add(name, rng.uniform(-bound, bound, size=shape))

    def zeros(self, name, shape) -> Tensor:
        return self.add(name, np.zeros(shape))

    def zero_grad(self):
        for t in self.params.values():
            t.grad = None

    def grads(self) -> dict[str, np.ndarray]:
        return {k: (t.grad if t.grad is not None else np.zeros_like(t.data))
                for k, t in self.params.items()}

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self.params.items()}

    def load_arrays(self, arrays: dict):
        for k, t in self.params.items():
            if k not in arrays:
                raise DataError(f"missing tensor {k!r}")
            arr = np.asarray(arrays[k], dtype=np.float64)
            if arr.shape != t.shape:
                raise DataError(f"tensor {k!r} has shape {arr.shape}, expected {t.shape}")
            t.data = arr.copy()

    def num_values(self) -> int:
        return int(sum(t.data.size for t in self.params.values()))


def clip_grad_norm(store: ParameterStore, max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most ``max_norm``."""
    total = math.sqrt(sum(float(np.sum(t.grad * t.grad))
                          for t in store.params.values() if t.grad is not None))
    if max_norm is not None and total > max_norm:
        factor = max_norm / total
        for t in store.params.values():
            if t.grad is not None:
                t.grad = t.grad * factor
    return total


def adam_step(store: ParameterStore, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """Bias-corrected Adam update of every parameter, in place.

    Parameters without a gradient are treated as having a zero gradient.
    """
    store.step += 1
    t = store.step
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name, p in store.params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        m = store.m.get(name)
        if m is None:
            m = store.m[name] = np.zeros_like(p.data)
            store.v[name] = np.zeros_like(p.data)
        v = store.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p.data = p.data - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


# ---------------------------------------------------------------- persistence

def _tensor_doc(arr):
    arr = np.asarray(arr, dtype=np.float64)
    return {"shape": list(arr.shape), "data": arr.ravel().tolist()}


def _tensor_from_doc(name, doc):
    try:
        shape = tuple(int(s) for s in doc["shape"])
        data = np.asarray(doc["data"], dtype=np.float64)
    except (KeyError, TypeError, ValueError):
        raise DataError(f"malformed tensor entry {name!r}") from None
    if data.size != int(np.prod(shape)):
        raise DataError(f"tensor {name!r}: {data.size} values for shape {list(shape)}")
    return data.reshape(shape)


def store_to_doc(store: ParameterStore, hyperparams: dict, optimizer=True) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "hyperparams": hyperparams,
        "tensors": {k: _tensor_doc(t.data) for k, t in store.params.items()},
    }
    if optimizer and store.step:
        doc["optimizer"] = {
            "step": store.step,
            "m": {k: _tensor_doc(a) for k, a in store.m.items()},
            "v": {k: _tensor_doc(a) for k, a in store.v.items()},
        }
    return doc


def read_doc(doc: dict) -> tuple[dict, dict[str, np.ndarray], dict | None]:
    """Validate a model document; returns (hyperparams, tensors, optimizer)."""
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported model format_version {version!r}")
    if "tensors" not in doc or "hyperparams" not in doc:
        raise DataError("model document needs 'hyperparams' and 'tensors'")
    tensors = {k: _tensor_from_doc(k, v) for k, v in doc["tensors"].items()}
    opt = doc.get("optimizer")
    if opt is not None:
        opt = {
            "step": int(opt["step"]),
            "m": {k: _tensor_from_doc(k, v) for k, v in opt["m"].items()},
            "v": {k: _tensor_from_doc(k, v) for k, v in opt["v"].items()},
        }
    return doc["hyperparams"], tensors, opt


def restore_optimizer(store: ParameterStore, opt: dict | None):
    if not opt:
        return
    store.step = opt["step"]
    store.m = {k: a.copy() for k, a in opt["m"].items()}
    store.v = {k: a.copy() for k, a in opt["v"].items()}


def write_json(doc: dict, path):
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc.msg}") from None
