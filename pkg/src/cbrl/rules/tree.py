"""Greedy binary decision trees with the gain-ratio criterion."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cbrl import kernels

DEFAULT_MU = 16
_EPS = 1e-12


@dataclass
class Node:
    counts: np.ndarray
    label: int
    feature: int = -1
    threshold: float = 0.0
    left: "Node | None" = None  # x[feature] <= threshold
    right: "Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class DecisionTree:
    root: Node
    n_features: int
    n_classes: int
    leaves: list[Node] = field(default_factory=list, repr=False)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index (into ``leaves``) for each row."""
        X = np.atleast_2d(X)
        out = np.empty(len(X), dtype=np.int64)
        index = {id(leaf): k for k, leaf in enumerate(self.leaves)}
        stack = [(self.root, np.arange(len(X)))]
        while stack:
            node, rows = stack.pop()
            if node.is_leaf:
                out[rows] = index[id(node)]
                continue
            go_left = X[rows, node.feature] <= node.threshold
            stack.append((node.left, rows[go_left]))
            stack.append((node.right, rows[~go_left]))
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        labels = np.array([leaf.label for leaf in self.leaves])
        return labels[self.apply(X)]

    def paths(self) -> list[tuple[list[tuple[int, str, float]], Node]]:
        """Every root-to-leaf path as ``(terms, leaf)`` with terms ``(feature, op, threshold)``."""
        out = []

        def walk(node: Node, terms: list) -> None:
            if node.is_leaf:
                out.append((terms, node))
                return
            walk(node.left, terms + [(node.feature, "<=", node.threshold)])
            walk(node.right, terms + [(node.feature, ">", node.threshold)])

        walk(self.root, [])
        return out

    @property
    def depth(self) -> int:
        return max((len(t) for t, _ in self.paths()), default=0)


def _majority(counts: np.ndarray) -> int:
    # argmax takes the first maximum: ties go to the lowest label id
    return int(np.argmax(counts))


def _best_split(X: np.ndarray, y: np.ndarray, sorted_idx: list[np.ndarray], n_classes: int):
    """Best (feature, threshold) by gain ratio among splits with at least
    average gain, or None when no split has positive gain."""
    cands = []
    for f, idx in enumerate(sorted_idx):
        vals = X[idx, f]
        cut, gain, info = kernels.split_stats(vals, y[idx], n_classes)
        keep = gain > _EPS
        if keep.any():
            cands.append((f, vals, cut[keep], gain[keep], info[keep]))
    if not cands:
        return None
    mean_gain = np.concatenate([c[3] for c in cands]).mean()
    best = None
    for f, vals, cut, gain, info in cands:
        ok = gain >= mean_gain - _EPS
        if not ok.any():
            continue
        ratio = np.where(ok, gain / np.maximum(info, _EPS), -np.inf)
        k = int(np.argmax(ratio))
        if best is None or ratio[k] > best[0] + _EPS:
            lo, hi = vals[cut[k]], vals[cut[k] + 1]
            thr = (lo + hi) / 2
            if not lo <= thr < hi:
                thr = lo
            best = (ratio[k], f, float(thr))
    return None if best is None else (best[1], best[2])


def induce_tree(X: np.ndarray, y: np.ndarray, mu: int = DEFAULT_MU, n_classes: int | None = None) -> DecisionTree:
    """Top-down induction; a node stays a leaf if pure, smaller than ``mu``,
    or without a positive-gain split."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("induce_tree needs a nonempty 2-D feature matrix")
    if len(X) != len(y):
        raise ValueError("X and y lengths differ")
    if mu < 2:
        raise ValueError("mu must be >= 2")
    n_classes = int(n_classes if n_classes is not None else y.max() + 1)
    n, d = X.shape
    presorted = [np.argsort(X[:, f], kind="stable") for f in range(d)]
    leaves: list[Node] = []
    side = np.zeros(n, dtype=bool)

    def grow(sorted_idx: list[np.ndarray]) -> Node:
        rows = sorted_idx[0]
        counts = np.bincount(y[rows], minlength=n_classes)
        node = Node(counts, _majority(counts))
        if len(rows) < mu or np.count_nonzero(counts) <= 1:
            leaves.append(node)
            return node
        split = _best_split(X, y, sorted_idx, n_classes)
        if split is None:
            leaves.append(node)
            return node
        node.feature, node.threshold = split
        side[rows] = X[rows, node.feature] <= node.threshold
        left = [idx[side[idx]] for idx in sorted_idx]
        right = [idx[~side[idx]] for idx in sorted_idx]
        node.left = grow(left)
        node.right = grow(right)
        return node

    root = grow(presorted)
    tree = DecisionTree(root, d, n_classes)
    tree.leaves = [leaf for _, leaf in tree.paths()]
    return tree
