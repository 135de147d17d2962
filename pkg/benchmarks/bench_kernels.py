"""Timing comparison of the compiled and pure-Python kernels.

Runs both backends on identical inputs, checks the outputs agree, and
prints per-kernel timings with the speedup. Usage:

    python3 benchmarks/bench_kernels.py [--trees N] [--rows N]
"""

import argparse
import time

import numpy as np

from page.kernels import _pykernels

try:
    from page.kernels import _ckernels
except ImportError:
    _ckernels = None


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        started = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - started)
    return best, out


def bench_grow_tree(rows, features, trees, repeat):
    rng = np.random.default_rng(0)
    X = np.ascontiguousarray(rng.normal(size=(rows, features)))
    y = np.ascontiguousarray(rng.integers(0, 5, size=rows), dtype=np.int32)
    idx = np.ascontiguousarray(rng.integers(0, rows, size=rows),
                               dtype=np.int32)
    mf = max(1, int(features ** 0.5))

    def run(impl):
        def go():
            out = None
            for seed in range(trees):
                out = impl.grow_tree(X, y, idx, 5, 10, 5, mf, seed)
            return out

        return go

    results = {}
    for name, impl in (("python", _pykernels), ("c", _ckernels)):
        if impl is None:
            continue
        results[name] = _time(run(impl), repeat)
    return results


def bench_lcs(length, pairs, repeat):
    rng = np.random.default_rng(1)
    seqs = [(np.ascontiguousarray(rng.integers(0, 30, size=length),
                                  dtype=np.int32),
             np.ascontiguousarray(rng.integers(0, 30, size=length),
                                  dtype=np.int32))
            for _ in range(pairs)]

    def run(impl):
        def go():
            return [impl.lcs_length(a, b) for a, b in seqs]

        return go

    results = {}
    for name, impl in (("python", _pykernels), ("c", _ckernels)):
        if impl is None:
            continue
        results[name] = _time(run(impl), repeat)
    return results


def _report(title, results, agree):
    print(f"\n{title}")
    py_time = results["python"][0]
    for name in ("python", "c"):
        if name not in results:
            print(f"  {name:>7}: not built")
            continue
        t = results[name][0]
        extra = f"  ({py_time / t:.1f}x vs python)" if name == "c" else ""
        print(f"  {name:>7}: {t * 1000:8.2f} ms{extra}")
    print(f"  outputs agree: {agree}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=500)
    parser.add_argument("--features", type=int, default=60)
    parser.add_argument("--trees", type=int, default=20)
    parser.add_argument("--lcs-length", type=int, default=400)
    parser.add_argument("--lcs-pairs", type=int, default=50)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    if _ckernels is None:
        print("compiled kernels not built; timing the fallback only")

    tree = bench_grow_tree(args.rows, args.features, args.trees,
                           args.repeat)
    agree = True
    if "c" in tree:
        agree = all(np.array_equal(a, b)
                    for a, b in zip(tree["python"][1], tree["c"][1]))
    _report(f"grow_tree: {args.trees} trees, {args.rows} rows x "
            f"{args.features} features", tree, agree)

    lcs = bench_lcs(args.lcs_length, args.lcs_pairs, args.repeat)
    agree = True
    if "c" in lcs:
        agree = lcs["python"][1] == lcs["c"][1]
    _report(f"lcs_length: {args.lcs_pairs} pairs of length "
            f"{args.lcs_length}", lcs, agree)


if __name__ == "__main__":
    main()
