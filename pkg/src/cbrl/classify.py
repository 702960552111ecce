"""Three-step object classifier.

1. k-means on detection encodings (k = number of object classes).
2. Descriptive labels for the centroids by a k-NN vote over labelled
   reference encodings from the validation split.
3. Final classification: 1-nearest neighbour over the labelled centroids.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from cbrl.vision import Detection

MAX_ITER = 300
DEFAULT_KNN = 24


class UnlabeledCentroidsError(ValueError):
    pass


@dataclass(frozen=True)
class CentroidSet:
    centroids: np.ndarray  # (k, d)
    labels: tuple[str, ...] | None = None
    inertia_history: tuple[float, ...] = field(default=(), compare=False)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1] if self.inertia_history else float("nan")

    def save(self, path: str | Path) -> None:
        if self.labels is None:
            raise UnlabeledCentroidsError("only labelled centroid sets are serialised")
        lines = [" ".join([lab] + [repr(float(v)) for v in row]) for lab, row in zip(self.labels, self.centroids)]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "CentroidSet":
        labels, rows = [], []
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            lab, *vals = line.split()
            labels.append(lab)
            rows.append([float(v) for v in vals])
        return cls(np.array(rows, dtype=np.float64), tuple(labels))


@dataclass(frozen=True)
class LabeledDetection:
    detection: Detection
    label: str

    @property
    def bbox(self):
        return self.detection.bbox

    @property
    def confidence(self) -> float:
        return self.detection.confidence

    @property
    def center(self) -> tuple[float, float]:
        return self.detection.bbox.center


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _init_centers(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded greedy D^2-weighted choice of k distinct samples.

    Each new centre is the best of a few D^2-sampled candidates, judged by
    the resulting potential (as in greedy k-means++)."""
    uniq = np.unique(x, axis=0)
    pool = uniq if len(uniq) >= k else x
    trials = 2 + int(np.log(k))
    first = int(rng.integers(len(pool)))
    chosen = [first]
    d2 = ((pool - pool[first]) ** 2).sum(axis=1)
    for _ in range(1, k):
        if d2.sum() > 0:
            cand = rng.choice(len(pool), size=trials, p=d2 / d2.sum())
        else:
            cand = rng.choice(np.setdiff1d(np.arange(len(pool)), chosen), size=1)
        best, best_d2 = None, None
        for c in cand:
            nd2 = np.minimum(d2, ((pool - pool[c]) ** 2).sum(axis=1))
            if best_d2 is None or nd2.sum() < best_d2.sum():
                best, best_d2 = int(c), nd2
        chosen.append(best)
        d2 = best_d2
    return pool[chosen].copy()


def fit_kmeans(encodings: Sequence[np.ndarray] | np.ndarray, k: int, seed: int = 0) -> CentroidSet:
    """Lloyd's algorithm until the assignment stops changing (at most 300 rounds)."""
    x = np.asarray(encodings, dtype=np.float64)
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(x) < k:
        raise ValueError(f"need at least k={k} points, got {len(x)}")
    rng = np.random.default_rng(seed)
    centers = _init_centers(x, k, rng)
    assign = None
    history = []
    for _ in range(MAX_ITER):
        d2 = _sq_dists(x, centers)
        new_assign = d2.argmin(axis=1)
        history.append(float(d2[np.arange(len(x)), new_assign].sum()))
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            members = x[assign == j]
            if len(members):
                centers[j] = members.mean(axis=0)
                continue
            # empty cluster: take over the point worst served by its centroid
            far = int(((x - centers[assign]) ** 2).sum(axis=1).argmax())
            centers[j] = x[far]
            assign[far] = j
    return CentroidSet(centers, None, tuple(history))


def label_centroids(
    cs: CentroidSet,
    labeled_refs: Sequence[tuple[np.ndarray, str]],
    k_nn: int = DEFAULT_KNN,
) -> CentroidSet:
    if len(labeled_refs) < k_nn:
        raise ValueError(f"need at least {k_nn} labelled references, got {len(labeled_refs)}")
    ref_x = np.array([r[0] for r in labeled_refs], dtype=np.float64)
    ref_y = [r[1] for r in labeled_refs]
    labels = []
    for c in cs.centroids:
        dist = np.sqrt(((ref_x - c) ** 2).sum(axis=1))
        nearest = np.argsort(dist, kind="stable")[:k_nn]
        votes = Counter(ref_y[i] for i in nearest)
        top = max(votes.values())
        tied = [lab for lab, n in votes.items() if n == top]
        if len(tied) > 1:
            mean_dist = {lab: float(np.mean([dist[i] for i in nearest if ref_y[i] == lab])) for lab in tied}
            tied.sort(key=lambda lab: (mean_dist[lab], lab))
        labels.append(tied[0])
    return replace(cs, labels=tuple(labels))


def classify(encoding: np.ndarray, cs: CentroidSet) -> str:
    if cs.labels is None:
        raise UnlabeledCentroidsError("centroid set has no labels; run label_centroids first")
    e = np.asarray(encoding, dtype=np.float64)
    if e.shape != cs.centroids.shape[1:]:
        raise ValueError(f"encoding dimension {e.shape} does not match centroids {cs.centroids.shape[1:]}")
    # argmin returns the first minimum, so ties go to the lower index
    return cs.labels[int(((cs.centroids - e) ** 2).sum(axis=1).argmin())]


def classify_detections(dets: Sequence[Detection], cs: CentroidSet) -> list[LabeledDetection]:
    return [LabeledDetection(d, classify(d.encoding, cs)) for d in dets]
