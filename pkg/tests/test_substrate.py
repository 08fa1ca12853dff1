import numpy as np
import pytest

import oracles
from gradcases import relative_error
from starorder.errors import DataError, InvalidArgument, InvalidState
from starorder.nn import ParameterStore, Tape, Tensor, adam_step, clip_grad_norm
from starorder.nn import tensor as T
from starorder.nn.layers import gru_step, init_gru
from starorder.nn.params import read_doc, read_json, store_to_doc, write_json


def test_softmax_examples():
    assert np.allclose(T.softmax(np.zeros((1, 4))).data, 0.25)
    p = T.softmax(np.array([[3.0, -1.0, 2.0]]), mask=[[False, True, False]]).data
    assert p.tolist() == [[0.0, 1.0, 0.0]]
    assert T.tanh(np.zeros(1)).data[0] == 0.0
    assert T.sigmoid(np.zeros(1)).data[0] == 0.5


def test_masked_softmax_properties(rng):
    x = rng.standard_normal((50, 7)) * 5
    mask = rng.random((50, 7)) < 0.6
    mask[:, 0] = True
    p = T.softmax(x, mask).data
    assert np.all(p[~mask] == 0.0)
    assert np.allclose(p.sum(axis=1), 1, atol=1e-12)
    lp = T.log_softmax(x, mask).data
    assert np.all(lp[~mask] == -np.inf)
    assert np.allclose(np.exp(lp), p, atol=1e-12)


def test_fully_masked_row_is_an_error():
    with pytest.raises(InvalidState):
        T.softmax(np.zeros((2, 3)), mask=[[True, False, False], [False, False, False]])
    with pytest.raises(InvalidState):
        T.log_softmax(np.zeros((1, 3)), mask=[[False] * 3])


def test_sigmoid_is_stable():
    y = T.sigmoid(np.array([-800.0, 800.0])).data
    assert y.tolist() == [0.0, 1.0]


def test_no_general_broadcasting():
    with pytest.raises(InvalidArgument):
        T.add(np.ones((2, 3)), np.ones((2, 1)))
    with pytest.raises(InvalidArgument):
        T.mul(np.ones((2, 3)), np.ones(3))
    with pytest.raises(InvalidArgument):
        T.matmul(np.ones((2, 3)), np.ones((4, 2)))


def test_backward_trivial_examples():
    w = Tensor(np.array([1.0, -2.0, 0.5]), requires_grad=True)
    with Tape() as tape:
        tape.backward(T.sum(w))
    assert w.grad.tolist() == [1.0, 1.0, 1.0]
    x = Tensor(np.array(2.0), requires_grad=True)
    y = Tensor(np.array(3.0), requires_grad=True)
    with Tape() as tape:
        tape.backward(T.mul(x, y))
    assert (float(x.grad), float(y.grad)) == (3.0, 2.0)


def test_no_graph_without_tape():
    w = Tensor(np.ones(3), requires_grad=True)
    out = T.sum(T.tanh(w))
    assert not out.requires_grad and out.parents == ()


def test_backward_requires_scalar():
    w = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        with pytest.raises(InvalidArgument):
            tape.backward(T.tanh(w))


def test_shared_node_accumulates():
    w = Tensor(np.array([0.3, -0.7]), requires_grad=True)
    with Tape() as tape:
        t = T.tanh(w)
        tape.backward(T.sum(T.add(T.mul(t, t), t)))
    y = np.tanh(w.data)
    assert np.allclose(w.grad, (2 * y + 1) * (1 - y * y), atol=1e-15)


@pytest.mark.parametrize("op", ["matmul", "concat", "expand", "reshape", "gather", "attend",
                                "softmax", "log_softmax", "sigmoid", "relu", "square", "mean"])
def test_primitive_gradients(op, rng):
    a = rng.standard_normal((3, 4, 5))
    b = rng.standard_normal((5, 2))
    idx = np.array([1, 3, 0])
    wts = rng.random((3, 4))
    mask = np.ones((3, 5), bool)
    mask[0, 2] = mask[2, 4] = False
    fns = {
        "matmul": lambda x: T.matmul(x, b),
        "concat": lambda x: T.concat([x, T.tanh(x)], axis=1),
        "expand": lambda x: T.expand(T.sum(x, axis=2), 1, 3),
        "reshape": lambda x: T.reshape(x, (12, 5)),
        "gather": lambda x: T.gather(x, idx),
        "attend": lambda x: T.attend(T.Tensor(wts), x),
        "softmax": lambda x: T.softmax(T.sum(x, axis=1), mask),
        "log_softmax": lambda x: T.gather(T.log_softmax(T.sum(x, axis=1), mask), [1, 0, 2]),
        "sigmoid": T.sigmoid,
        "relu": lambda x: T.relu(T.add(x, T.Tensor(np.full(x.shape, 0.05)))),
        "square": T.square,
        "mean": lambda x: T.mean(x, axis=1),
    }
    f = fns[op]
    x = Tensor(a.copy(), requires_grad=True)
    with Tape() as tape:
        out = f(x)
        w = rng.standard_normal(out.shape)
        tape.backward(T.sum(T.mul(out, T.Tensor(w))))
    num = np.zeros_like(a)
    for i in np.ndindex(a.shape):
        for sgn in (1, -1):
            x.data = a.copy()
            x.data[i] += sgn * 1e-6
            num[i] += sgn * float(np.sum(f(x).data * w)) / 2e-6
    assert relative_error(x.grad, num) < 1e-7


def _gru_store(rng, in_dim, H):
    store = ParameterStore()
    init_gru(store, "g", in_dim, H, rng)
    for t in store.params.values():
        t.data = rng.uniform(-0.8, 0.8, size=t.data.shape)
    return store


def test_gru_zero_weights_fixed_point():
    store = ParameterStore()
    init_gru(store, "g", 3, 4, np.random.default_rng(0))
    for t in store.params.values():
        t.data = np.zeros_like(t.data)
    out = gru_step(store, "g", np.ones((2, 3)), np.zeros((2, 4))).data
    assert np.all(out == 0)


def test_gru_closed_update_gate_keeps_state(rng):
    store = _gru_store(rng, 3, 4)
    store["g.b_z"].data = np.full(4, -1e4)
    h = rng.standard_normal((2, 4))
    assert np.array_equal(gru_step(store, "g", rng.standard_normal((2, 3)), h).data, h)


def test_gru_matches_scalar_oracle(rng):
    store = _gru_store(rng, 3, 4)
    x = rng.standard_normal(3)
    h = rng.standard_normal(4)
    got = gru_step(store, "g", x[None], h[None]).data[0]
    p = {k.split(".")[1]: t.data.tolist() for k, t in store.items()}
    ref = oracles.gru_step(p["W_z"], p["W_r"], p["W_h"], p["b_z"], p["b_r"], p["b_h"],
                           x.tolist(), h.tolist())
    assert np.allclose(got, ref, atol=1e-12, rtol=0)


def test_adam_first_step_and_zero_grad():
    store = ParameterStore()
    w = store.add("w", np.array([0.5]))
    w.grad = np.array([1.0])
    adam_step(store, lr=0.001)
    assert abs((w.data[0] - 0.5) + 0.001) < 1e-10
    before = w.data.copy()
    m_before = store.m["w"].copy()
    w.grad = np.zeros(1)
    adam_step(store, lr=0.001)
    # zero gradient: the first moment decays but the update is still driven by it
    assert store.m["w"][0] == pytest.approx(0.9 * m_before[0])
    fresh = ParameterStore()
    z = fresh.add("z", np.array([0.5]))
    z.grad = np.zeros(1)
    adam_step(fresh, lr=0.1)
    assert z.data[0] == 0.5 and store.step == 2 and before[0] != 0.5


def test_adam_descends_quadratic():
    store = ParameterStore()
    w = store.add("w", np.array([1.0]))
    path = [1.0]
    for _ in range(3):
        with Tape() as tape:
            tape.backward(T.sum(T.square(w)))
        adam_step(store, lr=0.1)
        store.zero_grad()
        path.append(abs(float(w.data[0])))
    assert all(b < a for a, b in zip(path, path[1:]))


def test_clip_grad_norm():
    store = ParameterStore()
    a = store.add("a", np.zeros(2))
    b = store.add("b", np.zeros(1))
    a.grad = np.array([3.0, 0.0])
    b.grad = np.array([4.0])
    assert clip_grad_norm(store, 2.0) == 5.0
    assert np.allclose(np.concatenate([a.grad, b.grad]), [1.2, 0.0, 1.6])
    assert clip_grad_norm(store, 10.0) == pytest.approx(2.0)


def test_store_rejects_duplicates_and_bad_loads():
    store = ParameterStore()
    store.add("w", np.zeros((2, 2)))
    with pytest.raises(InvalidArgument):
        store.add("w", np.zeros(1))
    with pytest.raises(DataError):
        store.load_arrays({"w": np.zeros(3)})
    with pytest.raises(DataError):
        store.load_arrays({})


def test_persistence_round_trip(tmp_path, rng):
    store = _gru_store(rng, 2, 3)
    for t in store.params.values():
        t.grad = rng.standard_normal(t.shape)
    adam_step(store)
    doc = store_to_doc(store, {"hidden": 3})
    write_json(doc, tmp_path / "m.json")
    hp, tensors, opt = read_doc(read_json(tmp_path / "m.json"))
    assert hp == {"hidden": 3}
    for k, t in store.items():
        assert np.array_equal(tensors[k], t.data)
        assert np.array_equal(opt["m"][k], store.m[k])
    assert opt["step"] == 1
    assert doc["tensors"]["g.W_z"]["shape"] == [5, 3]


def test_persistence_rejects_unknown_version():
    with pytest.raises(DataError):
        read_doc({"format_version": 2, "hyperparams": {}, "tensors": {}})
    with pytest.raises(DataError):
        read_doc({"format_version": 1, "hyperparams": {},
                  "tensors": {"w": {"shape": [2, 2], "data": [1.0]}}})
