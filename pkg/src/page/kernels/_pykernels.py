"""Pure-Python kernel backend.

This module is the reference semantics for the compiled backend in
_ckernels.pyx; the two must stay in lockstep and produce bit-identical
results. Everything that influences a decision is either exact integer
arithmetic or an IEEE-754 double computed by the same operation
sequence in both backends:

- the feature-subset RNG is SplitMix64, implemented identically;
- split acceptance (strictly better than the unsplit node) is an exact
  int64 comparison, valid for nodes up to ~60k samples;
- split ranking uses the double score A/nL + B/nR where A and B are
  integer sums of squared class counts, so both backends evaluate the
  same two divisions and one addition;
- thresholds are (v_lo + v_hi) * 0.5 over sorted feature values, and
  only boundaries between distinct values are candidates, making the
  result independent of how ties were ordered by the sort.

Nodes are stored in flat arrays; -1 marks "no feature" / "no child".
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    """Deterministic 64-bit stream for per-node feature subsets."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def grow_tree(X, y, sample_idx, n_classes, max_depth, min_samples_split,
              max_features, seed):
    """Grow one classification tree by greedy Gini minimization.

    X: float64 C-contiguous (n_rows, n_features); y: int32 class ids;
    sample_idx: int32 row indices forming the (possibly bootstrapped)
    training set; max_depth < 0 means unlimited.

    Returns (feature, threshold, left, right, counts) flat node arrays,
    counts being the per-node class histogram.
    """
    n_total = len(sample_idx)
    n_features = X.shape[1]
    if n_total < 1:
        raise ValueError("need at least one sample")
    cap = 2 * n_total  # a tree over n samples has at most 2n - 1 nodes
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    counts = np.zeros((cap, n_classes), dtype=np.int64)

    idx = np.array(sample_idx, dtype=np.int32)
    rng = SplitMix64(seed)
    stack = [(0, 0, n_total, 0)]
    next_node = 1

    while stack:
        node_id, start, end, depth = stack.pop()
        seg = idx[start:end]
        n_node = end - start
        y_node = y[seg]
        hist = np.bincount(y_node, minlength=n_classes).astype(np.int64)
        counts[node_id] = hist
        if (hist.max() == n_node or n_node < min_samples_split
                or (max_depth >= 0 and depth >= max_depth)):
            continue

        # Candidate features: partial Fisher-Yates draw, then scanned in
        # ascending index order so equal scores resolve to the lowest
        # feature index.
        feats = np.arange(n_features, dtype=np.int64)
        for i in range(max_features):
            j = i + rng.next() % (n_features - i)
            feats[i], feats[j] = feats[j], feats[i]
        subset = np.sort(feats[:max_features])

        parent_sq = int((hist * hist).sum())
        nl = np.arange(1, n_node, dtype=np.int64)
        nr = n_node - nl
        best_score = -1.0
        best_feat = -1
        best_thr = 0.0
        for f in subset:
            v = X[seg, f]
            order = np.argsort(v, kind="stable")
            vs = v[order]
            onehot = np.zeros((n_node, n_classes), dtype=np.int64)
            onehot[np.arange(n_node), y_node[order]] = 1
            cum = np.cumsum(onehot, axis=0)
            lc = cum[:-1]  # left class counts when splitting after row i
            A = (lc * lc).sum(axis=1)
            rc = hist[None, :] - lc
            B = (rc * rc).sum(axis=1)
            boundary = vs[1:] > vs[:-1]
            # Strict weighted-Gini improvement, exactly:
            #   A/nL + B/nR > parent_sq/n  <=>  n(A*nR + B*nL) > parent_sq*nL*nR
            improve = n_node * (A * nr + B * nl) > parent_sq * (nl * nr)
            valid = np.flatnonzero(boundary & improve)
            if valid.size == 0:
                continue
            score = A.astype(np.float64) / nl.astype(np.float64) \
                + B.astype(np.float64) / nr.astype(np.float64)
            k = valid[np.argmax(score[valid])]
            s = float(score[k])
            if s > best_score:
                best_score = s
                best_feat = int(f)
                best_thr = (float(vs[k]) + float(vs[k + 1])) * 0.5

        if best_feat < 0:
            continue
        v = X[seg, best_feat]
        mask = v <= best_thr
        n_left = int(mask.sum())
        if n_left == 0 or n_left == n_node:
            # Midpoint rounded onto an endpoint value; treat as a leaf.
            continue
        seg_left = seg[mask]
        seg_right = seg[~mask]
        idx[start:start + n_left] = seg_left
        idx[start + n_left:end] = seg_right

        li = next_node
        ri = next_node + 1
        next_node += 2
        feature[node_id] = best_feat
        threshold[node_id] = best_thr
        left[node_id] = li
        right[node_id] = ri
        stack.append((ri, start + n_left, end, depth + 1))
        stack.append((li, start, start + n_left, depth + 1))

    return (feature[:next_node].copy(), threshold[:next_node].copy(),
            left[:next_node].copy(), right[:next_node].copy(),
            counts[:next_node].copy())


def lcs_length(a, b) -> int:
    """Longest-common-subsequence length over two int sequences."""
    xs = np.asarray(a).tolist()
    ys = np.asarray(b).tolist()
    if not xs or not ys:
        return 0
    dp = [0] * (len(ys) + 1)
    for i in range(1, len(xs) + 1):
        prev = 0
        ai = xs[i - 1]
        for j in range(1, len(ys) + 1):
            tmp = dp[j]
            if ai == ys[j - 1]:
                dp[j] = prev + 1
            elif dp[j - 1] > dp[j]:
                dp[j] = dp[j - 1]
            prev = tmp
    return dp[len(ys)]
