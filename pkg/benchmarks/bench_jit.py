"""Compare the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_jit.py [--m 100] [--n 12] [--h 80] [--repeats 5]

Times contour sampling, descriptor construction and the pairwise distance
matrix for one data set under each backend, and checks both agree.
"""
import argparse
import time

import numpy as np

from starorder import _jit
from starorder.geometry import _descriptors, descriptor_distances, glyph_samples


def _best(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run(m=100, n=12, h=80, repeats=5, seed=0):
    values = np.random.default_rng(seed).random((m, n))
    results = {}
    for name in ("numpy", "numba"):
        _jit.set_backend(name)
        glyph_samples(values[:2], None, h)                     # warm-up / compile
        descriptor_distances(_descriptors(glyph_samples(values[:2], None, h)))
        t_s, samples = _best(lambda: glyph_samples(values, None, h), repeats)
        t_d, desc = _best(lambda: _descriptors(samples), repeats)
        t_p, dm = _best(lambda: descriptor_distances(desc), repeats)
        results[name] = {"samples": t_s, "descriptors": t_d, "pairwise": t_p, "dm": dm,
                         "desc": desc}
    _jit.set_backend("numba")
    return results


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=100)
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--h", type=int, default=80)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    res = run(args.m, args.n, args.h, args.repeats)
    print(f"m={args.m} n={args.n} h={args.h} (best of {args.repeats}, milliseconds)")
    print(f"{'stage':<12} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for stage in ("samples", "descriptors", "pairwise"):
        a, b = res["numpy"][stage] * 1e3, res["numba"][stage] * 1e3
        print(f"{stage:<12} {a:>10.2f} {b:>10.2f} {a / b:>7.1f}x")
    print("max |descriptor diff|:", float(np.abs(res["numpy"]["desc"] - res["numba"]["desc"]).max()))
    print("max |distance diff|:  ", float(np.abs(res["numpy"]["dm"] - res["numba"]["dm"]).max()))


if __name__ == "__main__":
    main()
