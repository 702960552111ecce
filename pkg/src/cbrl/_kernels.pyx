# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. ``cbrl._fallback`` holds the reference versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log

cnp.import_array()


cdef inline Py_ssize_t _find(Py_ssize_t[::1] parent, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t root = i, nxt
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


cdef inline void _union(Py_ssize_t[::1] parent, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    a = _find(parent, a)
    b = _find(parent, b)
    if a < b:
        parent[b] = a
    elif b < a:
        parent[a] = b


def label_components(mask):
    """8-connected labeling; labels numbered 1..n in raster order of each
    component's first pixel. Returns ``(labels, stats)`` where ``stats`` rows
    are ``(row_min, col_min, row_max, col_max, area)``."""
    cdef cnp.uint8_t[:, ::1] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    cdef Py_ssize_t r, c, i, root, n = 0
    parent_arr = np.arange(h * w, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = parent_arr
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] labels = labels_arr

    with nogil:
        for r in range(h):
            for c in range(w):
                if not m[r, c]:
                    continue
                i = r * w + c
                if c > 0 and m[r, c - 1]:
                    _union(parent, i, i - 1)
                if r > 0:
                    if m[r - 1, c]:
                        _union(parent, i, i - w)
                    if c > 0 and m[r - 1, c - 1]:
                        _union(parent, i, i - w - 1)
                    if c + 1 < w and m[r - 1, c + 1]:
                        _union(parent, i, i - w + 1)

    # roots are the minimum flat index of each component, i.e. its first pixel
    root_label_arr = np.zeros(h * w, dtype=np.int32)
    cdef cnp.int32_t[::1] root_label = root_label_arr
    with nogil:
        for r in range(h):
            for c in range(w):
                if not m[r, c]:
                    continue
                root = _find(parent, r * w + c)
                if root_label[root] == 0:
                    n += 1
                    root_label[root] = <cnp.int32_t>n
                labels[r, c] = root_label[root]

    stats_arr = np.zeros((n, 5), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] stats = stats_arr
    cdef cnp.int32_t lab
    for i in range(n):
        stats[i, 0] = h
        stats[i, 1] = w
        stats[i, 2] = -1
        stats[i, 3] = -1
    with nogil:
        for r in range(h):
            for c in range(w):
                lab = labels[r, c]
                if lab == 0:
                    continue
                i = lab - 1
                if r < stats[i, 0]:
                    stats[i, 0] = r
                if c < stats[i, 1]:
                    stats[i, 1] = c
                if r > stats[i, 2]:
                    stats[i, 2] = r
                if c > stats[i, 3]:
                    stats[i, 3] = c
                stats[i, 4] += 1
    return labels_arr, stats_arr


def channel_mode(stack):
    """Per-pixel, per-channel mode of a ``(N, H, W, C)`` uint8 stack.
    Ties go to the lowest value."""
    cdef cnp.uint8_t[:, :, :, ::1] s = np.ascontiguousarray(stack, dtype=np.uint8)
    cdef Py_ssize_t n = s.shape[0], h = s.shape[1], w = s.shape[2], ch = s.shape[3]
    out_arr = np.empty((h, w, ch), dtype=np.uint8)
    cdef cnp.uint8_t[:, :, ::1] out = out_arr
    cdef Py_ssize_t r, c, k, f, v, best, best_count
    cdef Py_ssize_t counts[256]
    with nogil:
        for r in range(h):
            for c in range(w):
                for k in range(ch):
                    for v in range(256):
                        counts[v] = 0
                    for f in range(n):
                        counts[s[f, r, c, k]] += 1
                    best = 0
                    best_count = counts[0]
                    for v in range(1, 256):
                        if counts[v] > best_count:
                            best_count = counts[v]
                            best = v
                    out[r, c, k] = <cnp.uint8_t>best
    return out_arr


cdef inline double _xlogx(double x) noexcept nogil:
    if x <= 0.0:
        return 0.0
    return x * log(x)


def split_stats(values, labels, Py_ssize_t n_classes):
    """Candidate binary splits of one sorted feature column.

    ``values`` must be sorted ascending with ``labels`` permuted alike.
    Returns ``(cut, gain, split_info)``: a cut ``i`` puts rows ``[0, i]`` left.
    Entropies are in nats."""
    cdef double[::1] x = np.ascontiguousarray(values, dtype=np.float64)
    cdef cnp.int64_t[::1] y = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t n = x.shape[0], i, k, m = 0
    total_arr = np.zeros(n_classes, dtype=np.float64)
    left_arr = np.zeros(n_classes, dtype=np.float64)
    cdef double[::1] total = total_arr
    cdef double[::1] left = left_arr
    cut_arr = np.empty(max(n - 1, 0), dtype=np.int64)
    gain_arr = np.empty(max(n - 1, 0), dtype=np.float64)
    info_arr = np.empty(max(n - 1, 0), dtype=np.float64)
    cdef cnp.int64_t[::1] cut = cut_arr
    cdef double[::1] gain = gain_arr
    cdef double[::1] info = info_arr
    cdef double dn = <double>n, nl, nr, parent_sum = 0.0, sl, sr, h_parent, h_children
    with nogil:
        for i in range(n):
            total[y[i]] += 1.0
        for k in range(n_classes):
            parent_sum += _xlogx(total[k])
        h_parent = log(dn) - parent_sum / dn if n > 0 else 0.0
        for i in range(n - 1):
            left[y[i]] += 1.0
            if x[i + 1] <= x[i]:
                continue
            nl = <double>(i + 1)
            nr = dn - nl
            sl = 0.0
            sr = 0.0
            for k in range(n_classes):
                sl += _xlogx(left[k])
                sr += _xlogx(total[k] - left[k])
            h_children = (_xlogx(nl) - sl + _xlogx(nr) - sr) / dn
            cut[m] = i
            gain[m] = h_parent - h_children
            info[m] = -((nl / dn) * log(nl / dn) + (nr / dn) * log(nr / dn))
            m += 1
    return cut_arr[:m].copy(), gain_arr[:m].copy(), info_arr[:m].copy()
