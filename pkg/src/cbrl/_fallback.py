"""Pure-Python / numpy versions of the compiled kernels in ``_kernels.pyx``.

Both implementations return identical results; the compiled one is only
faster. ``cbrl.kernels`` picks one at import time.
"""

from collections import deque

import numpy as np

_NEIGHBOURS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def label_components(mask):
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    labels = np.zeros((h, w), dtype=np.int32)
    stats = []
    # argwhere is row-major, so seeds are visited in raster order
    for r0, c0 in np.argwhere(m):
        if labels[r0, c0]:
            continue
        lab = len(stats) + 1
        labels[r0, c0] = lab
        box = [r0, c0, r0, c0, 0]
        queue = deque([(r0, c0)])
        while queue:
            r, c = queue.popleft()
            box[0] = min(box[0], r)
            box[1] = min(box[1], c)
            box[2] = max(box[2], r)
            box[3] = max(box[3], c)
            box[4] += 1
            for dr, dc in _NEIGHBOURS:
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w and m[rr, cc] and not labels[rr, cc]:
                    labels[rr, cc] = lab
                    queue.append((rr, cc))
        stats.append(box)
    return labels, np.array(stats, dtype=np.int64).reshape(-1, 5)


def channel_mode(stack):
    s = np.asarray(stack, dtype=np.uint8)
    n, h, w, ch = s.shape
    flat = s.reshape(n, -1)
    counts = np.zeros((flat.shape[1], 256), dtype=np.int32)
    cols = np.broadcast_to(np.arange(flat.shape[1]), flat.shape)
    np.add.at(counts, (cols.ravel(), flat.ravel()), 1)
    # argmax returns the first maximum, i.e. the lowest value
    return counts.argmax(axis=1).astype(np.uint8).reshape(h, w, ch)


def _xlogx(x):
    out = np.zeros_like(x, dtype=np.float64)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def split_stats(values, labels, n_classes):
    x = np.asarray(values, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    n = x.shape[0]
    if n < 2:
        empty = np.empty(0)
        return empty.astype(np.int64), empty, empty
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    total = left[-1] + onehot[-1]
    cut = np.flatnonzero(x[1:] > x[:-1])
    left = left[cut]
    right = total - left
    nl = (cut + 1).astype(np.float64)
    nr = n - nl
    h_parent = np.log(n) - _xlogx(total).sum() / n
    h_children = (_xlogx(nl) - _xlogx(left).sum(axis=1) + _xlogx(nr) - _xlogx(right).sum(axis=1)) / n
    pl, pr = nl / n, nr / n
    info = -(pl * np.log(pl) + pr * np.log(pr))
    return cut.astype(np.int64), h_parent - h_children, info
