# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled kernel backend.

Bit-for-bit equivalent to _pykernels.py, which documents the shared
semantics; keep the two in lockstep. The only differences here are
mechanical: explicit loops, an incremental sum-of-squares sweep instead
of cumulative arrays, and std::sort on (value, class) pairs. None of
those change any decision the algorithm makes (see the notes in
_pykernels.py on tie handling at value boundaries).
"""

import numpy as np

from libc.stdint cimport uint64_t, int32_t, int64_t
from libcpp.vector cimport vector
from libcpp.pair cimport pair
from libcpp.algorithm cimport sort as cpp_sort


cdef inline uint64_t _next_u64(uint64_t *state) noexcept nogil:
    cdef uint64_t z
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


def grow_tree(double[:, ::1] X, int32_t[::1] y, int32_t[::1] sample_idx,
              int n_classes, int max_depth, int min_samples_split,
              int max_features, seed):
    """Same contract and same output as _pykernels.grow_tree."""
    cdef Py_ssize_t n_total = sample_idx.shape[0]
    cdef Py_ssize_t n_features = X.shape[1]
    if n_total < 1:
        raise ValueError("need at least one sample")
    cdef Py_ssize_t cap = 2 * n_total

    feature_arr = np.full(cap, -1, dtype=np.int32)
    threshold_arr = np.zeros(cap, dtype=np.float64)
    left_arr = np.full(cap, -1, dtype=np.int32)
    right_arr = np.full(cap, -1, dtype=np.int32)
    counts_arr = np.zeros((cap, n_classes), dtype=np.int64)
    idx_arr = np.array(sample_idx, dtype=np.int32)
    tmp_arr = np.empty(n_total, dtype=np.int32)
    feats_arr = np.empty(n_features, dtype=np.int64)
    lc_arr = np.zeros(n_classes, dtype=np.int64)
    rc_arr = np.zeros(n_classes, dtype=np.int64)
    stack_arr = np.zeros((cap + 1, 4), dtype=np.int64)

    cdef int32_t[::1] feature = feature_arr
    cdef double[::1] threshold = threshold_arr
    cdef int32_t[::1] left = left_arr
    cdef int32_t[::1] right = right_arr
    cdef int64_t[:, ::1] counts = counts_arr
    cdef int32_t[::1] idx = idx_arr
    cdef int32_t[::1] tmp = tmp_arr
    cdef int64_t[::1] feats = feats_arr
    cdef int64_t[::1] lc = lc_arr
    cdef int64_t[::1] rc = rc_arr
    cdef int64_t[:, ::1] stack = stack_arr

    cdef uint64_t state = <uint64_t>seed
    cdef vector[pair[double, int]] buf
    buf.reserve(n_total)

    cdef Py_ssize_t sp = 1
    cdef Py_ssize_t next_node = 1
    cdef Py_ssize_t node_id, start, end, depth, n_node, n_left, pos
    cdef Py_ssize_t i, j, k, fi, f, cls, li, ri
    cdef int64_t key, t, max_count, parent_sq, A, B, nl, nr
    cdef double best_score, best_thr, score
    cdef Py_ssize_t best_feat

    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n_total
    stack[0, 3] = 0

    while sp > 0:
        sp -= 1
        node_id = stack[sp, 0]
        start = stack[sp, 1]
        end = stack[sp, 2]
        depth = stack[sp, 3]
        n_node = end - start

        for k in range(n_classes):
            counts[node_id, k] = 0
        for i in range(start, end):
            counts[node_id, y[idx[i]]] += 1
        max_count = 0
        parent_sq = 0
        for k in range(n_classes):
            if counts[node_id, k] > max_count:
                max_count = counts[node_id, k]
            parent_sq += counts[node_id, k] * counts[node_id, k]
        if (max_count == n_node or n_node < min_samples_split
                or (max_depth >= 0 and depth >= max_depth)):
            continue

        for i in range(n_features):
            feats[i] = i
        for i in range(max_features):
            j = i + <Py_ssize_t>(_next_u64(&state)
                                 % <uint64_t>(n_features - i))
            t = feats[i]
            feats[i] = feats[j]
            feats[j] = t
        # insertion sort of the drawn subset: ascending index scan order
        for i in range(1, max_features):
            key = feats[i]
            j = i - 1
            while j >= 0 and feats[j] > key:
                feats[j + 1] = feats[j]
                j -= 1
            feats[j + 1] = key

        best_score = -1.0
        best_feat = -1
        best_thr = 0.0
        for fi in range(max_features):
            f = <Py_ssize_t>feats[fi]
            buf.clear()
            for i in range(start, end):
                buf.push_back(pair[double, int](X[idx[i], f],
                                                <int>y[idx[i]]))
            cpp_sort(buf.begin(), buf.end())
            for k in range(n_classes):
                lc[k] = 0
                rc[k] = counts[node_id, k]
            A = 0
            B = parent_sq
            for i in range(1, n_node):
                cls = buf[i - 1].second
                A += 2 * lc[cls] + 1
                lc[cls] += 1
                rc[cls] -= 1
                B -= 2 * rc[cls] + 1
                if buf[i - 1].first < buf[i].first:
                    nl = i
                    nr = n_node - i
                    if (<int64_t>n_node * (A * nr + B * nl)
                            > parent_sq * (nl * nr)):
                        score = <double>A / <double>nl + <double>B / <double>nr
                        if score > best_score:
                            best_score = score
                            best_feat = f
                            best_thr = (buf[i - 1].first
                                        + buf[i].first) * 0.5

        if best_feat < 0:
            continue
        n_left = 0
        for i in range(start, end):
            if X[idx[i], best_feat] <= best_thr:
                tmp[n_left] = idx[i]
                n_left += 1
        if n_left == 0 or n_left == n_node:
            continue
        pos = n_left
        for i in range(start, end):
            if not (X[idx[i], best_feat] <= best_thr):
                tmp[pos] = idx[i]
                pos += 1
        for i in range(n_node):
            idx[start + i] = tmp[i]

        li = next_node
        ri = next_node + 1
        next_node += 2
        feature[node_id] = <int32_t>best_feat
        threshold[node_id] = best_thr
        left[node_id] = <int32_t>li
        right[node_id] = <int32_t>ri
        stack[sp, 0] = ri
        stack[sp, 1] = start + n_left
        stack[sp, 2] = end
        stack[sp, 3] = depth + 1
        sp += 1
        stack[sp, 0] = li
        stack[sp, 1] = start
        stack[sp, 2] = start + n_left
        stack[sp, 3] = depth + 1
        sp += 1

    return (feature_arr[:next_node].copy(), threshold_arr[:next_node].copy(),
            left_arr[:next_node].copy(), right_arr[:next_node].copy(),
            counts_arr[:next_node].copy())


def lcs_length(int32_t[::1] a, int32_t[::1] b):
    """Longest-common-subsequence length over two int sequences."""
    cdef Py_ssize_t la = a.shape[0]
    cdef Py_ssize_t lb = b.shape[0]
    if la == 0 or lb == 0:
        return 0
    dp_arr = np.zeros(lb + 1, dtype=np.int64)
    cdef int64_t[::1] dp = dp_arr
    cdef Py_ssize_t i, j
    cdef int64_t prev, tmp
    cdef int32_t ai
    for i in range(1, la + 1):
        prev = 0
        ai = a[i - 1]
        for j in range(1, lb + 1):
            tmp = dp[j]
            if ai == b[j - 1]:
                dp[j] = prev + 1
            elif dp[j - 1] > dp[j]:
                dp[j] = dp[j - 1]
            prev = tmp
    return int(dp[lb])
