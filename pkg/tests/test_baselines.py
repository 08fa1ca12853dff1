import json

import numpy as np
import pytest

import oracles
from starorder.baselines import (SwapConfig, circular_dissimilarity, column_dissimilarity,
                                 exhaustive, random_swap, salient_order, swap_sweep)
from starorder.dataset import DataSet, normalize, synth_dataset
from starorder.errors import BudgetExceeded, InvalidArgument
from starorder.metrics import ExactDistance, make_objective

SC = make_objective("sc", ExactDistance(40))


@pytest.fixture(scope="module")
def frozen(golden_dir):
    return json.loads((golden_dir / "regression.json").read_text())["search_m8_n6_K2"]


def _set(doc):
    s = doc["set"]
    return synth_dataset(s["m"], s["n"], s["K"], seed=s["seed"])


def test_swap_config_validation():
    with pytest.raises(InvalidArgument):
        SwapConfig(max_stall=-1)
    assert SwapConfig().max_stall == 10 and SwapConfig().max_iterations == 100


def test_zero_iterations_returns_identity():
    d = synth_dataset(8, 5, 2, seed=1)
    res = random_swap(d, SC, SwapConfig(max_iterations=0))
    assert res.ordering.tolist() == list(range(5))
    assert res.trace == [res.value] and res.evaluations == 1


def test_swap_trace_strictly_increasing_and_dominates_identity():
    for seed in range(4):
        d = synth_dataset(8, 6, 2, seed=seed)
        res = random_swap(d, SC, SwapConfig(seed=seed))
        assert all(b > a for a, b in zip(res.trace, res.trace[1:]))
        assert res.value >= SC(normalize(d), np.arange(6))
        assert res.value == SC(normalize(d), res.ordering)


def test_random_start_flag():
    d = synth_dataset(8, 6, 2, seed=3)
    res = random_swap(d, SC, SwapConfig(max_iterations=0, seed=5, random_start=True))
    assert res.ordering.tolist() == np.random.default_rng(5).permutation(6).tolist()


def test_random_swap_frozen_regression(frozen):
    res = random_swap(_set(frozen), make_objective("sc", ExactDistance(80)), SwapConfig(seed=0))
    assert res.ordering.tolist() == frozen["random_swap_ordering"]
    assert abs(res.value - frozen["random_swap_sc"]) < 1e-12


def test_sweep_non_decreasing():
    d = synth_dataset(8, 6, 2, seed=7)
    vals = swap_sweep(d, SC, [0, 1, 3, 10, 30, 100], seed=2)
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[0] == SC(normalize(d), np.arange(6))


def test_exhaustive_two_coordinates():
    d = DataSet([[0.1, 0.9], [0.2, 0.7], [0.9, 0.1], [0.8, 0.3]], [1, 1, 2, 2])
    res = exhaustive(d, SC)
    dn = normalize(d)
    vals = [SC(dn, np.array(p)) for p in ([0, 1], [1, 0])]
    assert res.evaluations == 2 and res.value == max(vals)
    expected = [0, 1] if vals[0] >= vals[1] else [1, 0]
    assert res.ordering.tolist() == expected


def test_exhaustive_matches_oracle_loop(frozen):
    res = exhaustive(_set(frozen), make_objective("sc", ExactDistance(80)))
    assert res.evaluations == 720
    assert res.ordering.tolist() == frozen["exhaustive_ordering"]
    assert abs(res.value - frozen["exhaustive_sc"]) < 1e-9


def test_exhaustive_dominates_swap_and_identity():
    d = synth_dataset(8, 5, 2, seed=11)
    ex = exhaustive(d, SC).value
    sw = random_swap(d, SC).value
    assert ex >= sw >= SC(normalize(d), np.arange(5))


def test_exhaustive_ties_lexicographic():
    d = DataSet([[0.5, 0.5, 0.5], [0.5, 0.5, 0.5]], [1, 2])
    assert exhaustive(d, SC).ordering.tolist() == [0, 1, 2]


def test_exhaustive_row_order_and_job_invariant():
    d = synth_dataset(8, 5, 3, seed=5)
    perm = np.random.default_rng(0).permutation(8)
    shuffled = DataSet(d.points[perm], d.labels[perm])
    a = exhaustive(d, SC)
    b = exhaustive(shuffled, SC)
    c = exhaustive(d, SC, jobs=3)
    assert a.ordering.tolist() == b.ordering.tolist() == c.ordering.tolist()
    assert a.value == c.value and abs(a.value - b.value) < 1e-12


def test_exhaustive_budget_guard():
    d = synth_dataset(4, 9, 2, seed=0)
    with pytest.raises(BudgetExceeded):
        exhaustive(d, SC)
    cheap = lambda dn, order: -float(order[0])      # noqa: E731
    res = exhaustive(d, cheap, allow_large=True)
    assert res.ordering.tolist() == list(range(9))


def test_salient_three_coordinates_identity():
    d = synth_dataset(10, 3, 2, seed=4)
    assert salient_order(d).ordering.tolist() == [0, 1, 2]


def test_salient_matches_circular_oracle(frozen):
    d = _set(frozen)
    res = salient_order(d)
    assert abs(res.value - frozen["salient_value"]) < 1e-12
    assert res.value >= circular_dissimilarity(column_dissimilarity(d), np.arange(6))
    assert not res.approximate


def test_salient_large_n_is_approximate_but_improves():
    d = synth_dataset(20, 12, 2, seed=9)
    res = salient_order(d)
    dis = column_dissimilarity(d)
    assert res.approximate and sorted(res.ordering.tolist()) == list(range(12))
    assert res.value >= circular_dissimilarity(dis, np.arange(12))
    ref = salient_order(d, exact_max_n=7)
    small = synth_dataset(20, 7, 2, seed=9)
    assert abs(salient_order(small).value - oracles.best_circular(
        normalize(small).points.T.tolist())[1]) < 1e-12
    assert ref.value == res.value


def test_column_dissimilarity_is_euclidean():
    d = synth_dataset(6, 4, 2, seed=2)
    cols = normalize(d).points.T
    dis = column_dissimilarity(d)
    assert np.allclose(dis[1, 3], np.linalg.norm(cols[1] - cols[3]), atol=1e-15)
    assert np.all(np.diag(dis) == 0)
