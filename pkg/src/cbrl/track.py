"""Centroid tracker.

Detections are matched to the tracks of the previous frame by centre
distance, within each class label. Unmatched detections open new tracks and
unmatched tracks are dropped immediately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from cbrl.classify import LabeledDetection

DEFAULT_D_MAX = 0.15
DEFAULT_HISTORY = 4


@dataclass
class Track:
    track_id: int
    label: str
    history: list[tuple[float, float]]
    bbox: object
    age: int = 0
    missed: bool = False

    @property
    def center(self) -> tuple[float, float]:
        return self.history[-1]


@dataclass
class TrackerState:
    tracks: list[Track] = field(default_factory=list)
    next_id: int = 0
    frame: int = 0
    d_max: float = DEFAULT_D_MAX
    history: int = DEFAULT_HISTORY


def _dist(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def greedy_pairs(
    track_centers: Sequence[tuple[float, float]],
    det_centers: Sequence[tuple[float, float]],
    d_max: float,
) -> dict[int, int]:
    """Map detection index -> track index.

    A detection may only take its nearest track (ties: lower track index),
    and only within ``d_max``. Candidate pairs are accepted globally nearest
    first; a track accepts at most one detection.
    """
    candidates = []
    for j, dc in enumerate(det_centers):
        if not track_centers:
            break
        dists = [_dist(tc, dc) for tc in track_centers]
        i = min(range(len(dists)), key=lambda t: (dists[t], t))
        if dists[i] <= d_max:
            candidates.append((dists[i], i, j))
    candidates.sort()
    taken, pairs = set(), {}
    for _, i, j in candidates:
        if i not in taken:
            taken.add(i)
            pairs[j] = i
    return pairs


def update(ts: TrackerState, dets: Sequence[LabeledDetection]) -> TrackerState:
    """Advance ``ts`` by one frame (in place) and return it."""
    survivors: list[Track] = []
    new_tracks: list[tuple[int, Track]] = []
    labels = sorted({d.label for d in dets} | {t.label for t in ts.tracks})
    for label in labels:
        tracks = [t for t in ts.tracks if t.label == label]
        idx = [j for j, d in enumerate(dets) if d.label == label]
        pairs = greedy_pairs([t.center for t in tracks], [dets[j].center for j in idx], ts.d_max)
        for local_j, j in enumerate(idx):
            d = dets[j]
            if local_j in pairs:
                t = tracks[pairs[local_j]]
                t.history.append(d.center)
                del t.history[: max(0, len(t.history) - ts.history)]
                t.bbox = d.bbox
                t.age += 1
                survivors.append(t)
            else:
                new_tracks.append((j, Track(-1, label, [d.center], d.bbox)))
    # ids follow detection order, independent of how labels are grouped
    new_tracks.sort(key=lambda item: item[0])
    for _, t in new_tracks:
        t.track_id = ts.next_id
        ts.next_id += 1
    ts.tracks = sorted(survivors, key=lambda t: t.track_id) + [t for _, t in new_tracks]
    ts.frame += 1
    return ts
