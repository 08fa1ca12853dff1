"""Set-to-sequence ordering policy trained with actor-critic REINFORCE.

The actor embeds every coordinate by running one recurrent encoder over the
m point values on that coordinate and another over the m matching class
centres, then decodes a permutation one coordinate at a time with additive
attention and a mask over coordinates already taken. The critic embeds the
same input, pools it, takes one glimpse and regresses the expected reward.
"""
from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset import CoordinateEncoding, DataSet, prepare
from .errors import DataError, InvalidArgument, InvalidState
from .metrics import make_objective
from .nn import tensor as T
from .nn.layers import additive_scores, dense, gru_step, init_dense, init_gru, run_gru
from .nn.params import (ParameterStore, adam_step, clip_grad_norm, read_doc, read_json,
                        restore_optimizer, store_to_doc, write_json)

log = logging.getLogger(__name__)


@dataclass
class OrderNetConfig:
    enc_hidden: int = 64          # per input channel; embeddings are 2x this wide
    dec_hidden: int = 64
    attn: int = 64
    critic_fc: int = 64
    glimpses: int = 1
    embedding: str = "channels"   # "channels": one encoder per channel; "joint": one over both
    seed: int = 0

    def __post_init__(self):
        if self.embedding not in ("channels", "joint"):
            raise InvalidArgument(f"embedding must be 'channels' or 'joint', got {self.embedding!r}")

    @property
    def embed_dim(self):
        return 2 * self.enc_hidden


def _init_embedding(store, cfg, rng):
    if cfg.embedding == "channels":
        init_gru(store, "embA", 1, cfg.enc_hidden, rng)
        init_gru(store, "embB", 1, cfg.enc_hidden, rng)
    else:
        init_gru(store, "emb", 2, cfg.embed_dim, rng)


def init_actor(cfg: OrderNetConfig, rng) -> ParameterStore:
    store = ParameterStore()
    E, Hd, A = cfg.embed_dim, cfg.dec_hidden, cfg.attn
    _init_embedding(store, cfg, rng)
    init_gru(store, "dec", E, Hd, rng)
    store.uniform("start", (E,), E, rng)
    store.uniform("W_a", (E + Hd, A), E + Hd, rng)
    store.uniform("v_a", (A,), A, rng)
    store.uniform("W_c", (2 * E, A), 2 * E, rng)
    store.uniform("v_c", (A,), A, rng)
    return store


def init_critic(cfg: OrderNetConfig, rng) -> ParameterStore:
    store = ParameterStore()
    E, A = cfg.embed_dim, cfg.attn
    _init_embedding(store, cfg, rng)
    store.uniform("W_g", (2 * E, A), 2 * E, rng)
    store.uniform("v_g", (A,), A, rng)
    init_dense(store, "fc1", E, cfg.critic_fc, rng)
    init_dense(store, "fc2", cfg.critic_fc, 1, rng)
    return store


# ---------------------------------------------------------------- building blocks

def _tokens(encs) -> np.ndarray:
    """Stack encodings into a (B, n, m, 2) array; all must share n and m."""
    if isinstance(encs, CoordinateEncoding):
        return encs.tokens[None]
    if isinstance(encs, np.ndarray):
        return encs if encs.ndim == 4 else encs[None]
    arrs = [e.tokens for e in encs]
    if len({a.shape for a in arrs}) != 1:
        raise InvalidArgument("a batch must share the coordinate count n and set size m")
    return np.stack(arrs)


def embed_coordinates(store: ParameterStore, cfg: OrderNetConfig, encs):
    """(B, n, E) embeddings: per coordinate, final encoder states over the m points."""
    tok = _tokens(encs)
    B, n, m, _ = tok.shape
    flat = tok.reshape(B * n, m, 2)
    if cfg.embedding == "channels":
        ha = run_gru(store, "embA", flat[:, :, :1], cfg.enc_hidden)
        hb = run_gru(store, "embB", flat[:, :, 1:], cfg.enc_hidden)
        e = T.concat([ha, hb])
    else:
        e = run_gru(store, "emb", flat, cfg.embed_dim)
    return T.reshape(e, (B, n, cfg.embed_dim))


@dataclass
class AttentionTrace:
    alignment: np.ndarray     # a^t, sums to 1
    scores: np.ndarray        # u^t
    context: np.ndarray       # c^t
    output_scores: np.ndarray  # masked logits, -inf where taken
    log_probs: np.ndarray      # log-probabilities of this step, -inf where taken


def attention_step(store: ParameterStore, e, hidden, mask):
    """One pointer step; returns (log-probabilities tensor, trace).

    ``mask`` is 1/True for coordinates still available.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim == 1:
        mask = mask[None]
    if not np.all(mask.any(axis=-1)):
        raise InvalidState("every coordinate is already taken")
    u = additive_scores(store, "W_a", "v_a", e, hidden)
    a = T.softmax(u)
    c = T.attend(a, e)
    ut = additive_scores(store, "W_c", "v_c", e, c)
    logp = T.log_softmax(ut, mask)
    trace = AttentionTrace(a.data, u.data, c.data, np.where(mask, ut.data, -np.inf),
                           logp.data.copy())
    return logp, trace


def glimpse(store: ParameterStore, e, query, iterations=1):
    """Attention-weighted mean of the embeddings, re-queried ``iterations`` times."""
    g = T.as_tensor(query)
    for _ in range(iterations):
        p = T.softmax(additive_scores(store, "W_g", "v_g", e, g))
        g = T.attend(p, e)
    return g


def critic_baseline(store: ParameterStore, cfg: OrderNetConfig, encs):
    """(B,) predicted reward for each input set."""
    e = embed_coordinates(store, cfg, encs)
    pooled = T.mean(e, axis=1)
    g = glimpse(store, e, pooled, cfg.glimpses)
    x = T.tanh(dense(store, "fc1", g))
    return T.reshape(dense(store, "fc2", x), (-1,))


# ---------------------------------------------------------------- decoding

@dataclass
class Rollout:
    orderings: np.ndarray          # (B, n) coordinate index per position
    step_logp: np.ndarray          # (B, n) log-probability of each selection
    logp: object                   # (B,) Tensor, summed log-probability (on the tape)
    rewards: np.ndarray | None = None
    baselines: np.ndarray | None = None
    traces: list = field(default_factory=list)

    @property
    def log_prob(self) -> np.ndarray:
        return np.asarray(self.logp.data)


def _sample_index(logp, mask, rng):
    p = np.where(mask, np.exp(logp), 0.0)
    cdf = np.cumsum(p, axis=1)
    u = rng.random(p.shape[0]) * cdf[:, -1]
    idx = np.array([np.searchsorted(cdf[b], u[b], side="right") for b in range(p.shape[0])])
    idx = np.minimum(idx, p.shape[1] - 1)
    bad = ~mask[np.arange(len(idx)), idx]
    if np.any(bad):   # u landed on the float tail of the cdf
        for b in np.where(bad)[0]:
            idx[b] = np.where(mask[b])[0][-1]
    return idx


def decode(store: ParameterStore, cfg: OrderNetConfig, encs, mode="greedy", rng=None,
           forced=None, keep_traces=False) -> Rollout:
    """Emit one permutation per input set.

    ``mode`` is "greedy" (argmax, lowest index on ties) or "sample"; passing
    ``forced`` (B, n) replays given orderings and only scores them.
    """
    if mode not in ("greedy", "sample"):
        raise InvalidArgument(f"mode must be 'greedy' or 'sample', got {mode!r}")
    if mode == "sample" and rng is None and forced is None:
        raise InvalidArgument("sampling needs an rng")
    e = embed_coordinates(store, cfg, encs)
    B, n, E = e.shape
    if forced is not None:
        forced = np.asarray(forced, dtype=np.int64).reshape(B, n)
    hidden = T.Tensor(np.zeros((B, cfg.dec_hidden)))
    x = T.expand(store["start"], 0, B)
    mask = np.ones((B, n), dtype=bool)
    orderings = np.empty((B, n), dtype=np.int64)
    step_logp = np.empty((B, n))
    picked = []
    traces = []
    rows = np.arange(B)
    for t in range(n):
        hidden = gru_step(store, "dec", x, hidden)
        logp, trace = attention_step(store, e, hidden, mask)
        if keep_traces:
            traces.append(trace)
        if forced is not None:
            idx = forced[:, t]
            if not np.all(mask[rows, idx]):
                raise InvalidArgument("forced ordering repeats a coordinate")
        elif mode == "greedy":
            idx = np.argmax(logp.data, axis=1)
        else:
            idx = _sample_index(logp.data, mask, rng)
        sel = T.gather(logp, idx)
        picked.append(T.reshape(sel, (B, 1)))
        step_logp[:, t] = sel.data
        orderings[:, t] = idx
        mask[rows, idx] = False
        x = T.gather(e, idx)
    total = T.sum(T.concat(picked, axis=1), axis=1)
    return Rollout(orderings, step_logp, total, traces=traces)


# ---------------------------------------------------------------- losses

def actor_loss(rewards, baselines, logp):
    """mean((R - b) * log p); the baseline enters as a constant."""
    adv = np.asarray(rewards, dtype=np.float64) - np.asarray(baselines, dtype=np.float64)
    return T.mean(T.mul(T.Tensor(adv), logp))


def critic_loss(baseline, rewards):
    return T.mean(T.square(T.sub(baseline, T.Tensor(np.asarray(rewards, dtype=np.float64)))))


def reward(d: DataSet, order, objective="sc", dist=None) -> float:
    """Negative objective of ``order`` (lower is better)."""
    obj = make_objective(objective, dist) if isinstance(objective, str) else objective
    dn, _ = prepare(d)
    return -float(obj(dn, np.asarray(order)))


# ---------------------------------------------------------------- model

class OrderNet:
    """Actor and critic parameters plus their shared configuration."""

    def __init__(self, config: OrderNetConfig | None = None):
        self.config = config or OrderNetConfig()
        rng = np.random.default_rng(self.config.seed)
        self.actor = init_actor(self.config, rng)
        self.critic = init_critic(self.config, rng)

    def decode(self, encs, mode="greedy", rng=None, forced=None, keep_traces=False):
        return decode(self.actor, self.config, encs, mode, rng, forced, keep_traces)

    def baseline(self, encs):
        return critic_baseline(self.critic, self.config, encs)

    def infer(self, d: DataSet, samples=1, objective="sc", dist=None, seed=0):
        return infer(self, d, samples, objective, dist, seed)

    def to_doc(self, extra=None):
        hp = {"kind": "ordernet", **asdict(self.config)}
        if extra:
            hp["training"] = extra
        actor = store_to_doc(self.actor, {})
        critic = store_to_doc(self.critic, {})
        doc = {"format_version": actor["format_version"], "hyperparams": hp,
               "tensors": {**{f"actor/{k}": v for k, v in actor["tensors"].items()},
                           **{f"critic/{k}": v for k, v in critic["tensors"].items()}}}
        opt = {}
        for name, part in (("actor", actor), ("critic", critic)):
            if "optimizer" in part:
                opt[name] = part["optimizer"]
        if opt:
            doc["optimizer"] = opt
        return doc

    def save(self, path, extra=None):
        write_json(self.to_doc(extra), path)

    @classmethod
    def from_doc(cls, doc):
        opt_all = doc.get("optimizer") or {}
        hp, tensors, _ = read_doc({k: v for k, v in doc.items() if k != "optimizer"})
        if hp.get("kind") != "ordernet":
            raise DataError(f"not an ordering-net model (kind={hp.get('kind')!r})")
        fields = {k: v for k, v in hp.items() if k in OrderNetConfig.__dataclass_fields__}
        net = cls(OrderNetConfig(**fields))
        net.actor.load_arrays({k[6:]: v for k, v in tensors.items() if k.startswith("actor/")})
        net.critic.load_arrays({k[7:]: v for k, v in tensors.items() if k.startswith("critic/")})
        for name, store in (("actor", net.actor), ("critic", net.critic)):
            if name in opt_all:
                _, _, opt = read_doc({"format_version": doc["format_version"], "hyperparams": {},
                                      "tensors": {}, "optimizer": opt_all[name]})
                restore_optimizer(store, opt)
        return net

    @classmethod
    def load(cls, path):
        return cls.from_doc(read_json(path))


# ---------------------------------------------------------------- inference

def infer(net: OrderNet, d: DataSet, samples=1, objective="sc", dist=None, seed=0):
    """Greedy decode plus ``samples - 1`` sampled decodes; best by objective.

    Returns (ordering, objective value). Ties keep the earlier candidate, so
    the greedy ordering wins any tie.
    """
    if samples < 1:
        raise InvalidArgument("samples must be >= 1")
    obj = make_objective(objective, dist) if isinstance(objective, str) else objective
    dn, enc = prepare(d)
    cands = [net.decode(enc, "greedy").orderings[0]]
    if samples > 1:
        tok = np.repeat(enc.tokens[None], samples - 1, axis=0)
        cands.extend(net.decode(tok, "sample", np.random.default_rng(seed)).orderings)
    best, best_val = None, -np.inf
    for o in cands:
        v = obj(dn, o)
        if v > best_val:
            best, best_val = o, v
    return best, float(best_val)


# ---------------------------------------------------------------- training

@dataclass
class TrainConfig:
    steps: int = 100
    batch: int = 64
    lr: float = 1e-4
    critic_lr: float | None = None
    clip: float = 2.0
    objective: str = "sc"
    seed: int = 0
    jobs: int = 1
    checkpoint_every: int = 0
    output_dir: str | None = None


def _buckets(sets):
    """Pre-normalised, pre-encoded sets grouped by (n, m)."""
    groups: dict[tuple, list] = {}
    for d in sets:
        dn, enc = prepare(d)
        groups.setdefault((dn.n, dn.m), []).append((dn, enc))
    return groups


class _BatchStream:
    """Endless shuffled batches; each batch comes from one (n, m) group."""

    def __init__(self, sets, batch, rng):
        self.groups = list(_buckets(sets).values())
        self.batch = batch
        self.rng = rng
        self.queue: list = []

    def _refill(self):
        chunks = []
        for items in self.groups:
            perm = self.rng.permutation(len(items))
            chunks.extend([items[i] for i in perm[s:s + self.batch]]
                          for s in range(0, len(items), self.batch))
        order = self.rng.permutation(len(chunks))
        self.queue = [chunks[k] for k in order]

    def next(self):
        if not self.queue:
            self._refill()
        return self.queue.pop(0)


def _rewards(obj, items, orderings, jobs):
    def one(k):
        return -float(obj(items[k][0], orderings[k]))
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return np.array(list(pool.map(one, range(len(items)))))
    return np.array([one(k) for k in range(len(items))])


def train(sets, train_cfg: TrainConfig, net_cfg: OrderNetConfig | None = None,
          dist=None, net: OrderNet | None = None, log_path=None, callback=None):
    """Actor-critic training; returns (net, log entries).

    Each step samples one ordering per set in the batch, scores it with the
    objective, and applies one Adam step to the actor (advantage-weighted
    log-likelihood) and one to the critic (squared error to the reward).
    """
    if not sets:
        raise InvalidArgument("training needs at least one data set")
    net = net or OrderNet(net_cfg)
    obj = make_objective(train_cfg.objective, dist)
    rng = np.random.default_rng(train_cfg.seed)
    stream = _BatchStream(sets, train_cfg.batch, rng)
    critic_lr = train_cfg.critic_lr or train_cfg.lr
    entries = []
    log_fh = open(log_path, "a", encoding="utf-8") if log_path else None
    try:
        for step in range(train_cfg.steps):
            t0 = time.perf_counter()
            items = stream.next()
            encs = [enc for _, enc in items]
            net.actor.zero_grad()
            net.critic.zero_grad()
            with T.Tape() as tape:
                roll = net.decode(encs, "sample", rng)
                base = net.baseline(encs)
                R = _rewards(obj, items, roll.orderings, train_cfg.jobs)
                la = actor_loss(R, base.data, roll.logp)
                lc = critic_loss(base, R)
                tape.backward(T.add(la, lc))
            clip_grad_norm(net.actor, train_cfg.clip)
            clip_grad_norm(net.critic, train_cfg.clip)
            adam_step(net.actor, train_cfg.lr)
            adam_step(net.critic, critic_lr)
            entry = {"step": step, "mean_reward": float(R.mean()),
                     "actor_loss": float(la.data), "critic_loss": float(lc.data),
                     "seconds": time.perf_counter() - t0}
            entries.append(entry)
            if log_fh:
                log_fh.write(json.dumps(entry) + "\n")
            log.info("step %d reward %.4f actor %.4f critic %.5f", step, entry["mean_reward"],
                     entry["actor_loss"], entry["critic_loss"])
            if callback:
                callback(entry)
            if (train_cfg.checkpoint_every and train_cfg.output_dir
                    and (step + 1) % train_cfg.checkpoint_every == 0):
                net.save(Path(train_cfg.output_dir) / f"ordernet_step{step + 1}.json")
    finally:
        if log_fh:
            log_fh.close()
    return net, entries
