"""Composition of the stages: game state -> objects -> tracks -> concepts.

``ConceptEnv`` is what the policy and the rule set interact with: it steps a
simulator and returns concept vectors instead of frames.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from cbrl import env
from cbrl.classify import DEFAULT_KNN, CentroidSet, LabeledDetection, classify_detections, fit_kmeans, label_centroids
from cbrl.data import DatasetManifest, load_frame, load_split
from cbrl.env import CLASSES, GameId, GameState
from cbrl.evaluation import ConfusionMatrix, evaluate_detections, match
from cbrl.relations import ConceptSchema, assign_slots, compute_concepts
from cbrl.track import DEFAULT_D_MAX, DEFAULT_HISTORY, TrackerState, update
from cbrl.vision import (
    DEFAULT_MIN_AREA,
    DEFAULT_CALIBRATION_FRAMES,
    DEFAULT_TAU,
    ENCODING_DIM,
    REGION_RULES,
    BackgroundModel,
    BBox,
    Detection,
    build_background,
    localize,
)


class Extractor(Protocol):
    def __call__(self, state: GameState) -> list[LabeledDetection]: ...


class GroundTruthExtractor:
    """Objects straight from the simulator's annotations; no rendering."""

    _ZERO = np.zeros(ENCODING_DIM)

    def __call__(self, state: GameState) -> list[LabeledDetection]:
        return [
            LabeledDetection(Detection(BBox(*g.bbox), 1.0, self._ZERO), g.label)
            for g in env.ground_truth(state)
        ]


@dataclass
class VisionExtractor:
    """Render, subtract the background, find blobs, filter, classify."""

    game: GameId
    background: BackgroundModel
    centroids: CentroidSet
    tau: float = DEFAULT_TAU
    min_area: int = DEFAULT_MIN_AREA

    def detect(self, frame: env.Frame) -> list[LabeledDetection]:
        dets = localize(frame, self.background, REGION_RULES[self.game], self.tau, self.min_area)
        return classify_detections(dets, self.centroids)

    def __call__(self, state: GameState) -> list[LabeledDetection]:
        return self.detect(env.render(state))


class ConceptEnv:
    def __init__(
        self,
        game: GameId | str,
        extractor: Extractor,
        schema: ConceptSchema,
        d_max: float = DEFAULT_D_MAX,
        history: int = DEFAULT_HISTORY,
    ):
        self.game = GameId.parse(game)
        self.extractor = extractor
        self.schema = schema
        self.d_max = d_max
        self.history = history
        self.n_actions = env.n_actions(self.game)
        self.state: GameState | None = None
        self.tracker: TrackerState | None = None

    @property
    def obs_dim(self) -> int:
        return len(self.schema)

    def _observe(self) -> np.ndarray:
        update(self.tracker, self.extractor(self.state))
        return compute_concepts(assign_slots(self.tracker.tracks, self.schema.slot_schema), self.schema)

    def reset(self, seed: int) -> np.ndarray:
        self.state = env.reset(self.game, seed)
        self.tracker = TrackerState(d_max=self.d_max, history=self.history)
        return self._observe()

    def step(self, action: int) -> tuple[np.ndarray, float, bool]:
        self.state, reward, done = env.step(self.state, action)
        return self._observe(), reward, done


def fit_vision(
    manifest: DatasetManifest,
    seed: int = 0,
    tau: float = DEFAULT_TAU,
    min_area: int = DEFAULT_MIN_AREA,
    k_nn: int = DEFAULT_KNN,
    calibration_frames: int = DEFAULT_CALIBRATION_FRAMES,
) -> tuple[BackgroundModel, CentroidSet]:
    """Background from training frames; centroids fitted and named on the
    first frame of every validation sequence (never the training split)."""
    game = manifest.game
    # calibration frames spread evenly over the whole training split, so that
    # objects lingering near their spawn points do not enter the mode image
    records = manifest.split_frames("train")
    picks = np.linspace(0, len(records) - 1, min(calibration_frames, len(records))).round().astype(int)
    bg = build_background([load_frame(manifest, records[i])[0] for i in picks])
    rule = REGION_RULES[game]
    encodings, refs = [], []
    for frames, gts in load_split(manifest, "val"):
        first, truth = frames[0], gts[0]
        dets = localize(first, bg, rule, tau, min_area)
        encodings.extend(d.encoding for d in dets)
        m = match(dets, truth)
        refs.extend((dets[i].encoding, truth[j].label) for i, j in m.pairs)
    k = len(CLASSES[game])
    cs = fit_kmeans(encodings, k, seed)
    return bg, label_centroids(cs, refs, k_nn)


def evaluate_vision(
    manifest: DatasetManifest,
    background: BackgroundModel,
    centroids: CentroidSet,
    split: str = "test",
    tau: float = DEFAULT_TAU,
    min_area: int = DEFAULT_MIN_AREA,
) -> ConfusionMatrix:
    """Per-object confusion counts over every frame of a split."""
    extractor = VisionExtractor(manifest.game, background, centroids, tau, min_area)

    def samples():
        for frames, gts in load_split(manifest, split):
            for frame, truth in zip(frames, gts):
                yield extractor.detect(frame), truth

    return evaluate_detections(samples(), CLASSES[manifest.game])


def collect_states(make_env, selector, n: int, eps: float, seed: int) -> np.ndarray:
    """``n`` concept vectors visited by the selector, acting randomly with probability ``eps``."""
    rng = np.random.default_rng(seed)
    e = make_env()
    episode = seed * 100_003
    x = e.reset(episode)
    out = np.empty((n, e.obs_dim))
    for i in range(n):
        out[i] = x
        a = int(rng.integers(e.n_actions)) if rng.random() < eps else selector(x)
        x, _, done = e.step(a)
        if done:
            episode += 1
            x = e.reset(episode)
    return out
