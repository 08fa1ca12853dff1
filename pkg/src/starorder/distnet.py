"""Learned approximation of the shape-context distance between two glyphs.

A shared recurrent encoder reads each contour as a sequence of 2-D points;
the two final states are concatenated and passed through two dense layers
and a sigmoid. Predictions are averaged over both argument orders, so the
network is exactly symmetric.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import DataError, InvalidArgument
from .geometry import (DEFAULT_H, R_FLOOR, _descriptors, _polygon, check_ordering,
                       glyph_samples)
from .nn import tensor as T
from .nn.layers import dense, init_dense, init_gru, run_gru
from .nn.params import (ParameterStore, adam_step, read_doc, read_json, restore_optimizer,
                        store_to_doc, write_json)

log = logging.getLogger(__name__)


@dataclass
class DistNetConfig:
    hidden: int = 32
    fc: int = 64
    h: int = 40
    input_mode: str = "sample"      # "sample": contour samples, "orig": polygon corners
    n_range: tuple = (8, 12)
    pairs: int = 5000
    holdout: float = 0.1
    epochs: int = 40
    batch: int = 32
    lr: float = 5e-3
    seed: int = 0

    def __post_init__(self):
        self.n_range = tuple(self.n_range)
        if self.input_mode not in ("sample", "orig"):
            raise InvalidArgument(f"input_mode must be 'sample' or 'orig', got {self.input_mode!r}")


@dataclass
class ShapePair:
    samples_a: np.ndarray
    samples_b: np.ndarray
    target: float
    vertices_a: np.ndarray | None = None
    vertices_b: np.ndarray | None = None

    def to_dict(self):
        doc = {"samples_a": self.samples_a.tolist(), "samples_b": self.samples_b.tolist(),
               "target": self.target}
        if self.vertices_a is not None:
            doc["vertices_a"] = self.vertices_a.tolist()
            doc["vertices_b"] = self.vertices_b.tolist()
        return doc

    @classmethod
    def from_dict(cls, doc):
        va = doc.get("vertices_a")
        vb = doc.get("vertices_b")
        return cls(np.asarray(doc["samples_a"]), np.asarray(doc["samples_b"]),
                   float(doc["target"]),
                   None if va is None else np.asarray(va),
                   None if vb is None else np.asarray(vb))


class DistanceNet:
    def __init__(self, config: DistNetConfig | None = None, store: ParameterStore | None = None):
        self.config = config or DistNetConfig()
        if store is None:
            store = ParameterStore()
            rng = np.random.default_rng(self.config.seed)
            c = self.config
            init_gru(store, "enc", 2, c.hidden, rng)
            init_dense(store, "fc1", 2 * c.hidden, c.fc, rng)
            init_dense(store, "fc2", c.fc, 1, rng)
        self.store = store

    name = "net"

    # ------------------------------------------------------------ forward

    def encode(self, seqs, chunk=256):
        """(B, L, 2) point sequences -> (B, hidden) final encoder states."""
        if T.current_tape() is None:
            seqs = np.asarray(seqs)
            if len(seqs) <= chunk:
                return T.Tensor(self._encode_fast(seqs))
            return T.Tensor(np.concatenate([self._encode_fast(seqs[s:s + chunk])
                                            for s in range(0, len(seqs), chunk)]))
        return run_gru(self.store, "enc", seqs, self.config.hidden)

    def _encode_fast(self, seqs):
        # inference only: float32, gates fused, input projections hoisted out of the loop
        H = self.config.hidden
        p = {k.split(".", 1)[1]: t.data.astype(np.float32) for k, t in self.store.items()
             if k.startswith("enc.")}
        Wx = np.concatenate([p["W_z"][:2], p["W_r"][:2], p["W_h"][:2]], axis=1)
        bias = np.concatenate([p["b_z"], p["b_r"], p["b_h"]])
        Wzr = np.concatenate([p["W_z"][2:], p["W_r"][2:]], axis=1)
        Wh = p["W_h"][2:]
        B, L = seqs.shape[:2]
        steps = np.ascontiguousarray(seqs.transpose(1, 0, 2), dtype=np.float32).reshape(L * B, 2)
        xp = (steps @ Wx + bias).reshape(L, B, 3 * H)    # one 2-D matmul; 3-D is far slower
        h = np.zeros((B, H), np.float32)
        zr = np.empty((B, 2 * H), np.float32)
        c = np.empty((B, H), np.float32)
        for step in xp:
            np.matmul(h, Wzr, out=zr)
            zr += step[:, :2 * H]
            zr *= 0.5                      # sigmoid(x) = (1 + tanh(x/2)) / 2
            np.tanh(zr, out=zr)
            zr *= 0.5
            zr += 0.5
            np.matmul(zr[:, H:] * h, Wh, out=c)
            c += step[:, 2 * H:]
            np.tanh(c, out=c)
            c -= h
            c *= zr[:, :H]
            h += c
        return h.astype(np.float64)

    def head(self, s1, s2):
        """One argument order: sigmoid(fc2(tanh(fc1([s1; s2])))) -> (B,)."""
        x = T.tanh(dense(self.store, "fc1", T.concat([s1, s2])))
        return T.reshape(T.sigmoid(dense(self.store, "fc2", x)), (-1,))

    def symmetric_head(self, s1, s2):
        return T.scale(T.add(self.head(s1, s2), self.head(s2, s1)), 0.5)

    def forward(self, a_seqs, b_seqs):
        a = np.asarray(a_seqs, dtype=np.float64)
        b = np.asarray(b_seqs, dtype=np.float64)
        if a.shape != b.shape:
            raise InvalidArgument(f"sequence shapes differ: {a.shape} vs {b.shape}")
        enc = self.encode(np.concatenate([a, b]))
        B = a.shape[0]
        s1 = T.Tensor(enc.data[:B]) if not enc.requires_grad else _rows(enc, 0, B)
        s2 = T.Tensor(enc.data[B:]) if not enc.requires_grad else _rows(enc, B, 2 * B)
        return self.symmetric_head(s1, s2)

    def predict(self, a_seqs, b_seqs) -> np.ndarray:
        return self.forward(a_seqs, b_seqs).data.copy()

    def predict_pair(self, a, b) -> float:
        return float(self.predict(np.asarray(a)[None], np.asarray(b)[None])[0])

    # ------------------------------------------------------------ oracle API

    def glyph_inputs(self, values, order=None):
        values = np.asarray(values, dtype=np.float64)
        order = np.arange(values.shape[1]) if order is None else check_ordering(order, values.shape[1])
        if self.config.input_mode == "orig":
            return np.stack([_polygon(row, R_FLOOR) for row in values[:, order]])
        return glyph_samples(values, order, self.config.h)

    def distance_matrix(self, values, order):
        """Predicted m x m distance matrix; each glyph is encoded once."""
        seqs = self.glyph_inputs(values, order)
        enc = self.encode(seqs).data
        m = enc.shape[0]
        iu, ju = np.triu_indices(m, 1)
        pred = self.symmetric_head(T.Tensor(enc[iu]), T.Tensor(enc[ju])).data
        D = np.zeros((m, m))
        D[iu, ju] = pred
        D[ju, iu] = pred
        return D

    # ------------------------------------------------------------ persistence

    def to_doc(self):
        return store_to_doc(self.store, {"kind": "distnet", **_plain(asdict(self.config))})

    def save(self, path):
        write_json(self.to_doc(), path)

    @classmethod
    def from_doc(cls, doc):
        hp, tensors, opt = read_doc(doc)
        if hp.get("kind") != "distnet":
            raise DataError(f"not a distance-net model (kind={hp.get('kind')!r})")
        hp = {k: v for k, v in hp.items() if k != "kind"}
        net = cls(DistNetConfig(**hp))
        net.store.load_arrays(tensors)
        restore_optimizer(net.store, opt)
        return net

    @classmethod
    def load(cls, path):
        return cls.from_doc(read_json(path))


def _rows(t, lo, hi):
    """Differentiable row slice of a (B, H) tensor."""
    shape = t.shape

    def back(g):
        out = np.zeros(shape)
        out[lo:hi] = g
        return (out,)

    return T._node(t.data[lo:hi], (t,), back)


def _plain(d):
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


# ---------------------------------------------------------------- data

def make_pairs(count, n_range=(8, 12), h=DEFAULT_H, seed=0, with_vertices=False):
    """Random glyph pairs labelled with their exact shape distance.

    Both glyphs of a pair share n (drawn uniformly from ``n_range``) and
    take values uniform in [0, 1] under the identity ordering.
    """
    rng = np.random.default_rng(seed)
    pairs = []
    ns = rng.integers(n_range[0], n_range[1] + 1, size=count)
    for n in ns:
        vals = rng.random((2, int(n)))
        samples = glyph_samples(vals, None, h)
        desc = _descriptors(samples)
        target = _distance(desc[0], desc[1])
        va = vb = None
        if with_vertices:
            va, vb = _polygon(vals[0]), _polygon(vals[1])
        pairs.append(ShapePair(samples[0], samples[1], target, va, vb))
    return pairs


def _distance(d1, d2):
    den = d1 + d2
    return float(0.5 * np.sum((d1 - d2) ** 2 / np.where(den > 0, den, 1.0)) / d1.shape[0])


def save_pairs(pairs, path):
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(json.dumps(p.to_dict()) + "\n")


def load_pairs(path):
    with open(path, encoding="utf-8") as fh:
        return [ShapePair.from_dict(json.loads(line)) for line in fh if line.strip()]


def _pair_inputs(pairs, mode):
    if mode == "orig":
        if any(p.vertices_a is None for p in pairs):
            raise InvalidArgument("'orig' input mode needs pairs generated with vertices")
        return [p.vertices_a for p in pairs], [p.vertices_b for p in pairs]
    return [p.samples_a for p in pairs], [p.samples_b for p in pairs]


def _batches(a, b, y, batch, rng):
    """Shuffled minibatches, each drawn from a single sequence length."""
    by_len: dict[int, list[int]] = {}
    for i, seq in enumerate(a):
        by_len.setdefault(len(seq), []).append(i)
    chunks = []
    for length in sorted(by_len):
        idx = np.array(by_len[length])
        idx = idx[rng.permutation(len(idx))]
        chunks.extend(idx[s:s + batch] for s in range(0, len(idx), batch))
    for k in rng.permutation(len(chunks)):
        idx = chunks[k]
        yield np.stack([a[i] for i in idx]), np.stack([b[i] for i in idx]), y[idx]


def evaluate_mse(net: DistanceNet, pairs, batch=512) -> float:
    if not pairs:
        raise InvalidArgument("no pairs to evaluate")
    a, b = _pair_inputs(pairs, net.config.input_mode)
    y = np.array([p.target for p in pairs])
    err = 0.0
    rng = np.random.default_rng(0)
    for xa, xb, yt in _batches(a, b, y, batch, rng):
        err += float(np.sum((net.predict(xa, xb) - yt) ** 2))
    return err / len(pairs)


@dataclass
class DistNetReport:
    train_mse: list = field(default_factory=list)
    holdout_mse: float = float("nan")
    seconds: float = 0.0


def distnet_train(config: DistNetConfig, pairs=None, callback=None):
    """Fit a distance net with MSE loss and Adam. Returns (net, report).

    ``pairs`` defaults to ``config.pairs`` freshly generated pairs; the last
    ``config.holdout`` fraction is held out for the final MSE.
    """
    t0 = time.perf_counter()
    if pairs is None:
        pairs = make_pairs(config.pairs, config.n_range, config.h, seed=config.seed + 1,
                           with_vertices=config.input_mode == "orig")
    if not pairs:
        raise InvalidArgument("distance-net training needs at least one pair")
    net = DistanceNet(config)
    n_hold = int(round(len(pairs) * config.holdout)) if len(pairs) > 1 else 0
    train, hold = pairs[:len(pairs) - n_hold], pairs[len(pairs) - n_hold:]
    a, b = _pair_inputs(train, config.input_mode)
    y = np.array([p.target for p in train])
    rng = np.random.default_rng(config.seed + 2)
    report = DistNetReport()
    for epoch in range(config.epochs):
        total = 0.0
        for xa, xb, yt in _batches(a, b, y, config.batch, rng):
            net.store.zero_grad()
            with T.Tape() as tape:
                pred = net.forward(xa, xb)
                loss = T.mean(T.square(T.sub(pred, T.Tensor(yt))))
                tape.backward(loss)
            adam_step(net.store, config.lr)
            total += float(loss.data) * len(yt)
        report.train_mse.append(total / len(y))
        log.info("distnet epoch %d train mse %.5f", epoch, report.train_mse[-1])
        if callback:
            callback(epoch, report.train_mse[-1])
    if hold:
        report.holdout_mse = evaluate_mse(net, hold)
    report.seconds = time.perf_counter() - t0
    return net, report


def random_glyph_pairs(count, n_range=(8, 12), seed=0):
    """(values_a, values_b) pairs sharing n, values uniform in [0, 1]."""
    rng = np.random.default_rng(seed)
    out = []
    for n in rng.integers(n_range[0], n_range[1] + 1, size=count):
        v = rng.random((2, int(n)))
        out.append((v[0], v[1]))
    return out


def distnet_speed_check(net: DistanceNet, glyph_pairs, h_exact=DEFAULT_H, repeats=1):
    """Milliseconds per pair, end to end from glyph values.

    The exact path samples both contours at ``h_exact`` points, builds both
    descriptors and takes the chi-squared distance; the network path builds
    its own inputs (``net.config.h`` samples, or corners) and predicts.
    Pairs are grouped by n so both paths run batched.
    """
    if not glyph_pairs:
        raise InvalidArgument("speed check needs at least one pair")
    groups: dict[int, list[int]] = {}
    for i, (a, _) in enumerate(glyph_pairs):
        groups.setdefault(len(a), []).append(i)
    stacked = {n: (np.stack([glyph_pairs[i][0] for i in idx]),
                   np.stack([glyph_pairs[i][1] for i in idx])) for n, idx in groups.items()}

    def run_net():
        # sampled contours all have h points whatever n is, so they share one batch
        by_len: dict[int, list] = {}
        for n, idx in groups.items():
            va, vb = stacked[n]
            xa, xb = net.glyph_inputs(va), net.glyph_inputs(vb)
            by_len.setdefault(xa.shape[1], []).append((idx, xa, xb))
        out = np.empty(len(glyph_pairs))
        for parts in by_len.values():
            idx = np.concatenate([p[0] for p in parts])
            out[idx] = net.predict(np.concatenate([p[1] for p in parts]),
                                   np.concatenate([p[2] for p in parts]))
        return out

    def run_exact():
        out = np.empty(len(glyph_pairs))
        for n, idx in groups.items():
            va, vb = stacked[n]
            da = _descriptors(glyph_samples(va, None, h_exact))
            db = _descriptors(glyph_samples(vb, None, h_exact))
            out[idx] = [_distance(da[k], db[k]) for k in range(len(idx))]
        return out

    first = glyph_pairs[:1]
    net.predict(net.glyph_inputs(np.stack([first[0][0]])), net.glyph_inputs(np.stack([first[0][1]])))
    _descriptors(glyph_samples(np.stack([first[0][0]]), None, h_exact))
    best_net = best_exact = np.inf
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        pred = run_net()
        best_net = min(best_net, time.perf_counter() - t0)
        t0 = time.perf_counter()
        exact = run_exact()
        best_exact = min(best_exact, time.perf_counter() - t0)
    k = len(glyph_pairs)
    return {"net_ms_per_pair": 1e3 * best_net / k, "exact_ms_per_pair": 1e3 * best_exact / k,
            "speedup": best_exact / best_net, "predictions": pred, "exact": exact}
