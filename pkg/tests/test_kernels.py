import os
import subprocess
import sys
from functools import lru_cache

import numpy as np
import pytest

import page.kernels as kernels
from page.kernels import _pykernels

try:
    from page.kernels import _ckernels
except ImportError:
    _ckernels = None

needs_c = pytest.mark.skipif(_ckernels is None,
                             reason="compiled kernels not built")


def test_backend_value():
    assert kernels.BACKEND in ("c", "python")
    forced = os.environ.get("PAGE_KERNELS", "auto").strip().lower()
    if forced == "py":
        assert kernels.BACKEND == "python"
    elif _ckernels is not None:
        assert kernels.BACKEND == "c"


def test_invalid_backend_env_rejected():
    proc = subprocess.run(
        [sys.executable, "-c", "import page.kernels"],
        env={"PAGE_KERNELS": "bogus", "PATH": "/usr/bin:/bin"},
        capture_output=True, text=True)
    assert proc.returncode != 0
    assert "PAGE_KERNELS" in proc.stderr


def test_splitmix64_reference_stream():
    # known reference outputs for seed 0
    rng = _pykernels.SplitMix64(0)
    assert [rng.next() for _ in range(3)] == [
        0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_splitmix64_wraps_seed():
    a = _pykernels.SplitMix64(1 << 64)
    b = _pykernels.SplitMix64(0)
    assert a.next() == b.next()


def _lcs_brute(a, b):
    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


def test_lcs_examples():
    assert kernels.lcs_length([1, 2, 3, 4], [2, 1, 3, 4]) == 3
    assert kernels.lcs_length([], []) == 0
    assert kernels.lcs_length([1], []) == 0
    assert kernels.lcs_length([5, 5, 5], [5, 5]) == 2


def test_lcs_against_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a = tuple(rng.integers(0, 6, size=rng.integers(0, 9)).tolist())
        b = tuple(rng.integers(0, 6, size=rng.integers(0, 9)).tolist())
        assert kernels.lcs_length(a, b) == _lcs_brute(a, b)


@needs_c
def test_lcs_backends_agree():
    rng = np.random.default_rng(11)
    for _ in range(100):
        a = np.asarray(rng.integers(0, 8, size=rng.integers(0, 40)),
                       dtype=np.int32)
        b = np.asarray(rng.integers(0, 8, size=rng.integers(0, 40)),
                       dtype=np.int32)
        assert _ckernels.lcs_length(a, b) == _pykernels.lcs_length(a, b)


def _random_problem(rng):
    n = int(rng.integers(2, 60))
    f = int(rng.integers(1, 9))
    X = rng.normal(size=(n, f))
    # force value ties so threshold and ordering edge cases get exercised
    X = np.round(X, int(rng.integers(0, 2)))
    y = rng.integers(0, int(rng.integers(2, 6)), size=n)
    idx = rng.integers(0, n, size=n) if rng.integers(2) else np.arange(n)
    depth = None if rng.integers(2) else int(rng.integers(1, 7))
    mf = int(rng.integers(1, f + 1))
    return X, y, idx, depth, mf


@needs_c
def test_grow_tree_backends_bit_identical():
    rng = np.random.default_rng(42)
    for trial in range(25):
        X, y, idx, depth, mf = _random_problem(rng)
        kw = dict(n_classes=int(y.max()) + 1, max_depth=depth,
                  min_samples_split=2, max_features=mf,
                  seed=int(rng.integers(0, 1 << 63)))
        X64 = np.ascontiguousarray(X, dtype=np.float64)
        y32 = np.ascontiguousarray(y, dtype=np.int32)
        i32 = np.ascontiguousarray(idx, dtype=np.int32)
        d = -1 if depth is None else depth
        py = _pykernels.grow_tree(X64, y32, i32, kw["n_classes"], d, 2,
                                  mf, kw["seed"])
        cc = _ckernels.grow_tree(X64, y32, i32, kw["n_classes"], d, 2,
                                 mf, kw["seed"])
        for name, a, b in zip("feature threshold left right counts".split(),
                              py, cc):
            assert np.array_equal(a, b), f"trial {trial}: {name} differs"


def _tree(X, y, **kw):
    args = dict(n_classes=int(max(y)) + 1, max_depth=None,
                min_samples_split=2, max_features=np.shape(X)[1], seed=0)
    args.update(kw)
    return kernels.grow_tree(X, y, np.arange(len(y)), **args)


def test_grow_tree_pure_node_is_leaf():
    feature, threshold, left, right, counts = _tree(
        [[0.0], [1.0], [2.0]], [1, 1, 1], n_classes=2)
    assert len(feature) == 1
    assert feature[0] == -1 and left[0] == -1 and right[0] == -1
    assert counts[0].tolist() == [0, 3]


def test_grow_tree_structure_invariants():
    rng = np.random.default_rng(3)
    for _ in range(10):
        X, y, idx, depth, mf = _random_problem(rng)
        nc = int(y.max()) + 1
        feature, threshold, left, right, counts = kernels.grow_tree(
            X, y, idx, n_classes=nc, max_depth=depth,
            min_samples_split=2, max_features=mf, seed=9)
        n_nodes = len(feature)
        assert counts[0].tolist() == np.bincount(
            y[idx], minlength=nc).tolist()
        depths = {0: 0}
        for node in range(n_nodes):
            if feature[node] >= 0:
                li, ri = left[node], right[node]
                assert 0 < li < n_nodes and 0 < ri < n_nodes
                assert (counts[li] + counts[ri]).tolist() \
                    == counts[node].tolist()
                assert counts[li].sum() > 0 and counts[ri].sum() > 0
                depths[li] = depths[ri] = depths[node] + 1
            else:
                assert left[node] == -1 and right[node] == -1
        assert set(depths) == set(range(n_nodes))  # every node reachable
        if depth is not None:
            internal = [d for n, d in depths.items() if feature[n] >= 0]
            assert all(d < depth for d in internal)


def test_grow_tree_lowest_feature_wins_ties():
    # two identical columns: equal scores must pick feature 0
    col = np.array([0.0, 0.0, 1.0, 1.0])
    X = np.stack([col, col], axis=1)
    y = np.array([0, 0, 1, 1])
    feature, threshold, *_ = _tree(X, y)
    assert feature[0] == 0
    assert threshold[0] == pytest.approx(0.5)


def test_grow_tree_node_budget():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 3))
    y = rng.integers(0, 5, size=40)
    feature, *_rest = _tree(X, y)
    assert len(feature) <= 2 * 40


def test_wrapper_guards():
    X = np.zeros((4, 2))
    y = np.zeros(4, dtype=np.int32)
    idx = np.arange(4)
    with pytest.raises(ValueError):
        kernels.grow_tree(X, y, idx, n_classes=2, max_depth=None,
                          min_samples_split=2, max_features=0, seed=0)
    with pytest.raises(ValueError):
        kernels.grow_tree(X, y, idx, n_classes=2, max_depth=None,
                          min_samples_split=2, max_features=3, seed=0)
    with pytest.raises(ValueError):
        kernels.grow_tree(X, y, idx, n_classes=2, max_depth=None,
                          min_samples_split=1, max_features=1, seed=0)
    with pytest.raises(ValueError):
        kernels.grow_tree(X, y, np.zeros(0, dtype=np.int32), n_classes=2,
                          max_depth=None, min_samples_split=2,
                          max_features=1, seed=0)
    with pytest.raises(ValueError):
        kernels.grow_tree(np.zeros(4), y, idx, n_classes=2,
                          max_depth=None, min_samples_split=2,
                          max_features=1, seed=0)


def test_sample_cap_enforced():
    X = np.zeros((1, 1))
    y = np.zeros(1, dtype=np.int32)
    too_many = np.zeros(kernels.MAX_KERNEL_SAMPLES + 1, dtype=np.int32)
    with pytest.raises(ValueError):
        kernels.grow_tree(X, y, too_many, n_classes=2, max_depth=None,
                          min_samples_split=2, max_features=1, seed=0)


def test_seed_changes_feature_subsets():
    # with max_features=1 of many identical-quality features, different
    # seeds should eventually pick different features at the root
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 6))
    y = (X[:, 0] + X[:, 1] + X[:, 2] > 0).astype(np.int32)
    roots = {int(_tree(X, y, max_features=1, seed=s)[0][0])
             for s in range(12)}
    assert len(roots) > 1
