"""Reference optimisers: random swapping, exhaustive search, salient order."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import DataSet, normalize
from .errors import BudgetExceeded, InvalidArgument

EXHAUSTIVE_MAX_N = 8


@dataclass
class SwapConfig:
    max_stall: int = 10          # consecutive rejected swaps before giving up
    max_iterations: int = 100    # accepted improvements before stopping
    seed: int = 0
    random_start: bool = False

    def __post_init__(self):
        if self.max_stall < 0 or self.max_iterations < 0:
            raise InvalidArgument("swap budgets must be non-negative")


@dataclass
class SearchResult:
    ordering: np.ndarray
    value: float
    evaluations: int
    trace: list = field(default_factory=list)
    approximate: bool = False


class _Memo:
    """Caches objective values per ordering; counts distinct evaluations."""

    def __init__(self, objective, dn):
        self.objective = objective
        self.dn = dn
        self.cache: dict[tuple, float] = {}

    def __call__(self, order) -> float:
        key = tuple(int(i) for i in order)
        val = self.cache.get(key)
        if val is None:
            val = self.cache[key] = float(self.objective(self.dn, np.array(key)))
        return val


def random_swap(d: DataSet, objective, cfg: SwapConfig | None = None) -> SearchResult:
    """Hill climbing over random transpositions.

    A swap is kept only if it strictly improves the objective. The search
    stops after ``max_stall`` rejections in a row or ``max_iterations``
    accepted swaps. Runs that differ only in their budgets share the same
    random stream, so a larger budget never ends at a worse value.
    """
    cfg = cfg or SwapConfig()
    dn = normalize(d)
    n = dn.n
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(n) if cfg.random_start else np.arange(n)
    f = _Memo(objective, dn)
    value = f(order)
    trace = [value]
    accepted = stall = 0
    while accepted < cfg.max_iterations and stall < cfg.max_stall:
        i, j = rng.choice(n, size=2, replace=False)
        cand = order.copy()
        cand[i], cand[j] = cand[j], cand[i]
        v = f(cand)
        if v > value:
            order, value = cand, v
            trace.append(v)
            accepted += 1
            stall = 0
        else:
            stall += 1
    return SearchResult(order, value, len(f.cache), trace)


def swap_sweep(d: DataSet, objective, stalls, max_iterations=100, seed=0):
    """Final value for each stall budget, with a shared random stream."""
    out = []
    memo = _Memo(objective, normalize(d))
    for s in stalls:
        res = random_swap(d, memo_objective(memo), SwapConfig(s, max_iterations, seed))
        out.append(res.value)
    return out


def memo_objective(memo):
    """Adapter so a shared cache can be reused across several searches."""
    return lambda dn, order: memo(order)


def _best_with_prefix(dn, objective, first, n):
    best, best_val, count = None, -math.inf, 0
    rest = [i for i in range(n) if i != first]
    for perm in itertools.permutations(rest):
        order = (first,) + perm
        v = float(objective(dn, np.array(order)))
        count += 1
        if v > best_val:
            best, best_val = order, v
    return best, best_val, count


def exhaustive(d: DataSet, objective, allow_large=False, jobs=1) -> SearchResult:
    """Best of all n! orderings; ties go to the lexicographically smallest.

    The space is split by leading axis; with ``jobs > 1`` the parts run on a
    thread pool and are reduced in leading-axis order, so the result does not
    depend on the worker count.
    """
    dn = normalize(d)
    n = dn.n
    if n > EXHAUSTIVE_MAX_N and not allow_large:
        raise BudgetExceeded(f"exhaustive search over {n}! orderings exceeds the n <= "
                             f"{EXHAUSTIVE_MAX_N} budget")
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            parts = list(pool.map(lambda f: _best_with_prefix(dn, objective, f, n), range(n)))
    else:
        parts = [_best_with_prefix(dn, objective, f, n) for f in range(n)]
    best, best_val, count = None, -math.inf, 0
    for order, v, c in parts:
        count += c
        if v > best_val:
            best, best_val = order, v
    return SearchResult(np.array(best), best_val, count, [best_val])


# ---------------------------------------------------------------- salient

def column_dissimilarity(d: DataSet) -> np.ndarray:
    """n x n Euclidean distances between the normalised coordinate columns."""
    cols = normalize(d).points.T
    diff = cols[:, None, :] - cols[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def circular_dissimilarity(dis: np.ndarray, order) -> float:
    order = np.asarray(order)
    return float(np.mean(dis[order, np.roll(order, -1)]))


def salient_order(d: DataSet, exact_max_n=EXHAUSTIVE_MAX_N) -> SearchResult:
    """Ordering with the largest mean dissimilarity between neighbouring axes.

    Adjacency wraps around. For n <= ``exact_max_n`` every circular
    arrangement is enumerated once (fixing axis 0 first and the direction);
    beyond that a farthest-neighbour tour refined by 2-opt is returned and
    flagged approximate.
    """
    dis = column_dissimilarity(d)
    n = dis.shape[0]
    if n <= exact_max_n:
        best, best_val, count = None, -math.inf, 0
        for rest in itertools.permutations(range(1, n)):
            if n > 2 and rest[0] > rest[-1]:
                continue
            order = (0,) + rest
            v = circular_dissimilarity(dis, order)
            count += 1
            if v > best_val:
                best, best_val = order, v
        return SearchResult(np.array(best), best_val, count, [best_val])
    order = _farthest_tour(dis)
    order, count = _two_opt(dis, order)
    return SearchResult(order, circular_dissimilarity(dis, order), count,
                        [circular_dissimilarity(dis, order)], approximate=True)


def _farthest_tour(dis):
    n = dis.shape[0]
    tour = [0]
    left = set(range(1, n))
    while left:
        last = tour[-1]
        nxt = max(sorted(left), key=lambda j: dis[last, j])
        tour.append(nxt)
        left.remove(nxt)
    return np.array(tour)


def _two_opt(dis, order):
    """Segment reversals that increase total circular dissimilarity."""
    order = order.copy()
    n = len(order)
    count = 0
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            for j in range(i + 2, n if i > 0 else n - 1):
                a, b = order[i], order[i + 1]
                c, e = order[j], order[(j + 1) % n]
                delta = dis[a, c] + dis[b, e] - dis[a, b] - dis[c, e]
                count += 1
                if delta > 1e-12:
                    order[i + 1:j + 1] = order[i + 1:j + 1][::-1]
                    improved = True
    return order, count
