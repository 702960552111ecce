"""Detection and agent evaluation.

Detections are matched to ground truth greedily by confidence using the
centre-divergence score. The confusion matrix has rows = ground-truth class
plus ``not_an_object`` (detections without a ground-truth partner) and columns
= predicted class plus ``not_detected`` (missed ground-truth objects).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from cbrl.env import GroundTruthObject
from cbrl.policy.mlp import MLP, forward
from cbrl.rules.ruleset import RuleSet

MATCH_THRESHOLD = 0.5
NOT_AN_OBJECT = "not_an_object"
NOT_DETECTED = "not_detected"


def _box(b) -> tuple[float, float, float, float]:
    return b.as_tuple() if hasattr(b, "as_tuple") else tuple(b)


def center_divergence_score(p, g) -> float:
    """``max(0, 1 - |centre(p) - centre(g)| / diagonal(g))``."""
    px0, py0, px1, py1 = _box(p)
    gx0, gy0, gx1, gy1 = _box(g)
    diag = math.hypot(gx1 - gx0, gy1 - gy0)
    if diag <= 0.0:
        raise ValueError("ground-truth box has zero diagonal")
    d = math.hypot((px0 + px1 - gx0 - gx1) / 2, (py0 + py1 - gy0 - gy1) / 2)
    return max(0.0, 1.0 - d / diag)


@dataclass
class MatchResult:
    pairs: list[tuple[int, int]]  # (detection index, ground-truth index)
    unmatched_dets: list[int]
    unmatched_gts: list[int]


def match(dets: Sequence, gts: Sequence[GroundTruthObject], threshold: float = MATCH_THRESHOLD) -> MatchResult:
    scores = np.array([[center_divergence_score(d.bbox, g.bbox) for g in gts] for d in dets]).reshape(len(dets), len(gts))
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].confidence, i))
    free = set(range(len(gts)))
    pairs = []
    for i in order:
        options = [j for j in sorted(free) if scores[i, j] >= threshold]
        if not options:
            continue
        j = max(options, key=lambda j: (scores[i, j], -j))
        pairs.append((i, j))
        free.discard(j)
    matched_d = {i for i, _ in pairs}
    return MatchResult(
        sorted(pairs),
        [i for i in range(len(dets)) if i not in matched_d],
        sorted(free),
    )


@dataclass
class ConfusionMatrix:
    classes: tuple[str, ...]
    counts: np.ndarray = field(default=None)  # (len(classes) + 1, len(classes) + 1)

    def __post_init__(self):
        n = len(self.classes)
        if self.counts is None:
            self.counts = np.zeros((n + 1, n + 1), dtype=np.int64)
        self._index = {c: i for i, c in enumerate(self.classes)}

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ValueError(f"label {label!r} outside vocabulary {self.classes}") from None

    @property
    def row_labels(self) -> tuple[str, ...]:
        return self.classes + (NOT_AN_OBJECT,)

    @property
    def col_labels(self) -> tuple[str, ...]:
        return self.classes + (NOT_DETECTED,)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.classes != self.classes:
            raise ValueError("cannot add confusion matrices over different classes")
        return ConfusionMatrix(self.classes, self.counts + other.counts)

    def to_csv(self) -> str:
        lines = ["truth\\predicted," + ",".join(self.col_labels)]
        for lab, row in zip(self.row_labels, self.counts):
            lines.append(lab + "," + ",".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        width = max(len(s) for s in self.row_labels + self.col_labels) + 1
        head = " " * width + "".join(s.rjust(width) for s in self.col_labels)
        rows = [lab.ljust(width) + "".join(str(int(v)).rjust(width) for v in row) for lab, row in zip(self.row_labels, self.counts)]
        return "\n".join([head] + rows) + "\n"


def confusion(result: MatchResult, dets: Sequence, gts: Sequence[GroundTruthObject], classes: Sequence[str]) -> ConfusionMatrix:
    cm = ConfusionMatrix(tuple(classes))
    miss = len(cm.classes)
    for i, j in result.pairs:
        cm.counts[cm.index(gts[j].label), cm.index(dets[i].label)] += 1
    for i in result.unmatched_dets:
        cm.counts[miss, cm.index(dets[i].label)] += 1
    for j in result.unmatched_gts:
        cm.counts[cm.index(gts[j].label), miss] += 1
    return cm


def summarize(cm: ConfusionMatrix) -> tuple[float, float, float]:
    """Micro precision (without the not_detected column), micro recall
    (without the not_an_object row) and their harmonic mean."""
    c = cm.counts
    n = len(cm.classes)
    correct = float(np.trace(c[:n, :n]))
    detected = float(c[:, :n].sum())
    actual = float(c[:n, :].sum())
    p = correct / detected if detected else 0.0
    r = correct / actual if actual else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def per_class_scores(cm: ConfusionMatrix) -> dict[str, tuple[float, float, float]]:
    out = {}
    for k, lab in enumerate(cm.classes):
        tp = float(cm.counts[k, k])
        det = float(cm.counts[:, k].sum())
        act = float(cm.counts[k, :].sum())
        p = tp / det if det else 0.0
        r = tp / act if act else 0.0
        out[lab] = (p, r, 2 * p * r / (p + r) if p + r > 0 else 0.0)
    return out


def evaluate_detections(
    samples: Iterable[tuple[Sequence, Sequence[GroundTruthObject]]],
    classes: Sequence[str],
    threshold: float = MATCH_THRESHOLD,
) -> ConfusionMatrix:
    """Pool per-object counts over ``(labelled detections, ground truth)`` frames."""
    total = ConfusionMatrix(tuple(classes))
    for dets, gts in samples:
        total = total + confusion(match(dets, gts, threshold), dets, gts, classes)
    return total


def as_selector(selector) -> Callable[[np.ndarray], int]:
    if isinstance(selector, MLP):
        return lambda x: int(np.argmax(forward(selector, x)[0]))
    if isinstance(selector, RuleSet):
        return lambda x: int(selector.predict(x[None, :])[0])
    if callable(selector):
        return selector
    raise TypeError(f"cannot act with {type(selector).__name__}")


def evaluate_agent(
    make_env: Callable[[], object],
    selector,
    episodes: int = 5,
    seeds: Sequence[int] | None = None,
) -> tuple[float, float, list[float]]:
    """Mean and sample standard deviation of episode rewards over seeded episodes."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    seeds = list(seeds) if seeds is not None else list(range(episodes))
    act = as_selector(selector)
    rewards = []
    for seed in seeds[:episodes]:
        e = make_env()
        x = e.reset(seed)
        total, done = 0.0, False
        while not done:
            x, r, done = e.step(act(x))
            total += r
        rewards.append(total)
    std = float(np.std(rewards, ddof=1)) if len(rewards) > 1 else 0.0
    return float(np.mean(rewards)), std, rewards
