"""Finite-difference gradient checks for every composite layer.

Each case builds a tiny randomly initialised model and returns
(store, loss_fn); ``loss_fn()`` recomputes a scalar Tensor from scratch.
"""
import numpy as np

from starorder.dataset import CoordinateEncoding
from starorder.distnet import DistanceNet, DistNetConfig
from starorder.nn import tensor as T
from starorder.nn.layers import gru_step
from starorder.ordernet import (OrderNetConfig, actor_loss, attention_step, critic_baseline,
                                critic_loss, decode, embed_coordinates, glimpse, init_actor,
                                init_critic)

EPS = 1e-4
TOL = 1e-3


def _cfg(seed, embedding="channels"):
    return OrderNetConfig(enc_hidden=3, dec_hidden=4, attn=5, critic_fc=4, seed=seed,
                          embedding=embedding)


def _encs(rng, B=2, n=4, m=3):
    return [CoordinateEncoding(rng.random((n, m, 2))) for _ in range(B)]


def _spread(store, rng, scale=0.6):
    # default init is small; widen it so every gate and tanh sees curvature
    for t in store.params.values():
        t.data = rng.uniform(-scale, scale, size=t.data.shape)


def relative_error(analytic, numeric):
    a, n = np.ravel(analytic), np.ravel(numeric)
    denom = max(np.linalg.norm(a) + np.linalg.norm(n), 1e-10)
    return float(np.linalg.norm(a - n) / denom)


def check(store, loss_fn, eps=EPS, max_entries=40, rng=None):
    """Worst relative error over all parameters of ``store``."""
    rng = rng or np.random.default_rng(0)
    store.zero_grad()
    with T.Tape() as tape:
        loss = loss_fn()
        tape.backward(loss)
    grads = store.grads()
    worst = 0.0
    for name, p in store.items():
        flat = p.data.reshape(-1)
        idx = np.arange(flat.size)
        if flat.size > max_entries:
            idx = rng.choice(flat.size, max_entries, replace=False)
        num = np.empty(len(idx))
        for k, i in enumerate(idx):
            old = flat[i]
            flat[i] = old + eps
            with T.Tape():
                up = float(loss_fn().data)
            flat[i] = old - eps
            with T.Tape():
                down = float(loss_fn().data)
            flat[i] = old
            num[k] = (up - down) / (2 * eps)
        worst = max(worst, relative_error(grads[name].reshape(-1)[idx], num))
    return worst


def case_embedding(seed):
    rng = np.random.default_rng(seed)
    cfg = _cfg(seed)
    store = init_actor(cfg, rng)
    _spread(store, rng)
    encs = _encs(rng)
    w = rng.standard_normal((2, 4, cfg.embed_dim))
    return store, lambda: T.sum(T.mul(embed_coordinates(store, cfg, encs), T.Tensor(w)))


def case_decoder_step(seed):
    rng = np.random.default_rng(seed)
    cfg = _cfg(seed)
    store = init_actor(cfg, rng)
    _spread(store, rng)
    x = rng.standard_normal((3, cfg.embed_dim))
    h = rng.standard_normal((3, cfg.dec_hidden)) * 0.5
    w = rng.standard_normal((3, cfg.dec_hidden))
    return store, lambda: T.sum(T.mul(gru_step(store, "dec", x, h), T.Tensor(w)))


def case_attention(seed):
    rng = np.random.default_rng(seed)
    cfg = _cfg(seed)
    store = init_actor(cfg, rng)
    _spread(store, rng)
    e = rng.standard_normal((2, 5, cfg.embed_dim))
    hidden = rng.standard_normal((2, cfg.dec_hidden))
    mask = np.array([[1, 0, 1, 1, 0], [1, 1, 1, 1, 1]], dtype=bool)
    idx = np.array([2, 4])
    w = rng.standard_normal(2)

    def loss():
        logp, _ = attention_step(store, e, hidden, mask)
        return T.sum(T.mul(T.gather(logp, idx), T.Tensor(w)))
    return store, loss


def case_glimpse(seed):
    rng = np.random.default_rng(seed)
    cfg = _cfg(seed)
    store = init_critic(cfg, rng)
    _spread(store, rng)
    e = rng.standard_normal((2, 5, cfg.embed_dim))
    q = rng.standard_normal((2, cfg.embed_dim))
    w = rng.standard_normal((2, cfg.embed_dim))
    return store, lambda: T.sum(T.mul(glimpse(store, e, q, iterations=2), T.Tensor(w)))


def case_critic_head(seed):
    rng = np.random.default_rng(seed)
    cfg = _cfg(seed)
    store = init_critic(cfg, rng)
    _spread(store, rng)
    encs = _encs(rng)
    w = rng.standard_normal(2)
    return store, lambda: T.sum(T.mul(critic_baseline(store, cfg, encs), T.Tensor(w)))


def case_distnet_head(seed):
    rng = np.random.default_rng(seed)
    net = DistanceNet(DistNetConfig(hidden=4, fc=5, seed=seed))
    _spread(net.store, rng)
    a = rng.random((3, 6, 2))
    b = rng.random((3, 6, 2))
    y = rng.random(3)
    return net.store, lambda: T.mean(T.square(T.sub(net.forward(a, b), T.Tensor(y))))


def case_actor_loss(seed):
    rng = np.random.default_rng(seed)
    cfg = _cfg(seed)
    store = init_actor(cfg, rng)
    # the decoder reaches the scores only through the shared context vector,
    # so its gradients are tiny unless the weights are fairly large
    _spread(store, rng, scale=1.5)
    encs = _encs(rng, B=3, n=4)
    forced = np.stack([rng.permutation(4) for _ in range(3)])
    R = -rng.random(3)
    b = -rng.random(3)
    return store, lambda: actor_loss(R, b, decode(store, cfg, encs, forced=forced).logp)


def case_critic_loss(seed):
    rng = np.random.default_rng(seed)
    cfg = _cfg(seed)
    store = init_critic(cfg, rng)
    _spread(store, rng)
    encs = _encs(rng, B=3)
    R = -rng.random(3)
    return store, lambda: critic_loss(critic_baseline(store, cfg, encs), R)


CASES = {
    "embedding": case_embedding,
    "decoder_step": case_decoder_step,
    "attention_step": case_attention,
    "glimpse": case_glimpse,
    "critic_head": case_critic_head,
    "distnet_head": case_distnet_head,
    "actor_loss": case_actor_loss,
    "critic_loss": case_critic_loss,
}
