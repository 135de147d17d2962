"""Numeric kernels: compiled core with a pure-Python fallback.

The backend is picked at import time from the PAGE_KERNELS environment
variable: "c" requires the compiled extension, "py" forces the pure
fallback, and "auto" (the default) prefers the extension when it is
built. Both backends give bit-identical results, so saved models and
scores do not depend on which one is active; see
benchmarks/bench_kernels.py for the speed gap.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

_choice = os.environ.get("PAGE_KERNELS", "auto").strip().lower()
if _choice not in ("auto", "c", "py"):
    raise ImportError(f"PAGE_KERNELS must be auto, c or py, got {_choice!r}")

_impl = None
if _choice in ("auto", "c"):
    try:
        from . import _ckernels as _impl
    except ImportError:
        if _choice == "c":
            raise ImportError(
                "PAGE_KERNELS=c but the compiled kernels are not available; "
                "reinstall the package with its build step enabled"
            )
if _impl is None:
    _impl = _pykernels

BACKEND = "c" if _impl is not _pykernels else "python"

# Split acceptance uses exact int64 arithmetic; past this node size the
# worst-case products could wrap.
MAX_KERNEL_SAMPLES = 60000


def grow_tree(X, y, sample_idx, *, n_classes, max_depth, min_samples_split,
              max_features, seed):
    """Grow one decision tree; returns flat node arrays.

    X is the full (n_rows, n_features) float64 matrix and sample_idx the
    row multiset to train on, so bootstrap resamples need no copies of
    X. max_depth=None means unlimited. Returns (feature, threshold,
    left, right, counts); feature and children are -1 at leaves.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int32)
    sample_idx = np.ascontiguousarray(sample_idx, dtype=np.int32)
    if X.ndim != 2:
        raise ValueError("X must be 2-dimensional")
    if len(sample_idx) > MAX_KERNEL_SAMPLES:
        raise ValueError(
            f"at most {MAX_KERNEL_SAMPLES} samples per tree are supported")
    if not 1 <= max_features <= X.shape[1]:
        raise ValueError("max_features must be in [1, n_features]")
    if min_samples_split < 2:
        raise ValueError("min_samples_split must be at least 2")
    depth = -1 if max_depth is None else int(max_depth)
    return _impl.grow_tree(X, y, sample_idx, int(n_classes), depth,
                           int(min_samples_split), int(max_features),
                           int(seed) & 0xFFFFFFFFFFFFFFFF)


def lcs_length(a, b) -> int:
    """Longest-common-subsequence length of two int sequences."""
    a = np.ascontiguousarray(a, dtype=np.int32)
    b = np.ascontiguousarray(b, dtype=np.int32)
    return int(_impl.lcs_length(a, b))
