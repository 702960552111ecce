"""Classical object localisation.

A per-pixel mode image serves as background model; pixels that differ from it
form a foreground mask whose 8-connected components become detections. Each
detection carries an 11-dimensional appearance encoding used by the classifier.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from cbrl import kernels
from cbrl.env import Frame, GameId

DEFAULT_CALIBRATION_FRAMES = 100
DEFAULT_TAU = 0.1
DEFAULT_MIN_AREA = 4
ENCODING_DIM = 11

_BG_MAGIC = b"CBBG"
_BG_VERSION = 1


@dataclass(frozen=True)
class BBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (0.0 <= self.x_min < self.x_max <= 1.0 and 0.0 <= self.y_min < self.y_max <= 1.0):
            raise ValueError(f"invalid bounding box {self}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    confidence: float
    encoding: np.ndarray


@dataclass(frozen=True)
class BackgroundModel:
    pixels: np.ndarray  # (H, W, 3) uint8

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def save(self, path: str | Path) -> None:
        header = _BG_MAGIC + struct.pack("<HHH", _BG_VERSION, self.width, self.height)
        Path(path).write_bytes(header + np.ascontiguousarray(self.pixels).tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "BackgroundModel":
        raw = Path(path).read_bytes()
        if raw[:4] != _BG_MAGIC:
            raise ValueError(f"{path}: not a background model file")
        version, w, h = struct.unpack("<HHH", raw[4:10])
        if version != _BG_VERSION:
            raise ValueError(f"{path}: unsupported background model version {version}")
        body = raw[10:]
        if len(body) != w * h * 3:
            raise ValueError(f"{path}: expected {w * h * 3} pixel bytes, found {len(body)}")
        return cls(np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3).copy())


def build_background(frames: Sequence[Frame]) -> BackgroundModel:
    """Per-pixel, per-channel mode over ``frames`` (ties go to the lower value)."""
    if len(frames) == 0:
        raise ValueError("build_background needs at least one frame")
    shape = frames[0].pixels.shape
    for f in frames:
        if f.pixels.shape != shape:
            raise ValueError(f"frame shape {f.pixels.shape} differs from {shape}")
    stack = np.stack([f.pixels for f in frames])
    return BackgroundModel(kernels.channel_mode(stack))


def foreground_mask(frame: Frame, bg: BackgroundModel, tau: float = DEFAULT_TAU) -> np.ndarray:
    if frame.pixels.shape != bg.pixels.shape:
        raise ValueError(f"frame shape {frame.pixels.shape} does not match background {bg.pixels.shape}")
    diff = np.abs(frame.pixels.astype(np.int16) - bg.pixels.astype(np.int16)).max(axis=2)
    return diff > tau * 255


def _hue_histogram(rgb: np.ndarray) -> np.ndarray:
    """Fraction of pixels in three 120-degree hue bins; grey pixels count nowhere."""
    mx = rgb.max(axis=1)
    mn = rgb.min(axis=1)
    chroma = mx - mn
    hist = np.zeros(3)
    colored = chroma > 0
    if not colored.any():
        return hist
    r, g, b = rgb[colored].T
    c, m = chroma[colored], mx[colored]
    hue = np.where(m == r, ((g - b) / c) % 6, np.where(m == g, (b - r) / c + 2, (r - g) / c + 4))
    bins = np.minimum((hue // 2).astype(int), 2)
    hist += np.bincount(bins, minlength=3)
    return hist / len(rgb)


def encode_patch(frame: Frame, bbox: BBox) -> np.ndarray:
    """Mean RGB, RGB std, 3-bin hue histogram, width and height; all in [0, 1]."""
    h, w = frame.height, frame.width
    c0, r0 = int(round(bbox.x_min * w)), int(round(bbox.y_min * h))
    c1, r1 = int(round(bbox.x_max * w)), int(round(bbox.y_max * h))
    if c1 <= c0 or r1 <= r0:
        raise ValueError(f"{bbox} covers no pixels")
    patch = frame.pixels[r0:r1, c0:c1].reshape(-1, 3).astype(np.float64)
    return np.concatenate(
        [
            patch.mean(axis=0) / 255.0,
            patch.std(axis=0) / 127.5,
            _hue_histogram(patch),
            [(c1 - c0) / w, (r1 - r0) / h],
        ]
    )


def detect_blobs(mask: np.ndarray, frame: Frame, min_area: int = DEFAULT_MIN_AREA) -> list[Detection]:
    if min_area < 1:
        raise ValueError("min_area must be >= 1")
    _, stats = kernels.label_components(np.asarray(mask, dtype=np.uint8))
    h, w = mask.shape
    dets = []
    for r0, c0, r1, c1, area in stats:
        if area < min_area:
            continue
        bbox = BBox(c0 / w, r0 / h, (c1 + 1) / w, (r1 + 1) / h)
        dets.append(Detection(bbox, min(1.0, area / (2 * min_area)), encode_patch(frame, bbox)))
    dets.sort(key=lambda d: (d.bbox.y_min, d.bbox.x_min))
    return dets


@dataclass(frozen=True)
class RegionFilterRule:
    name: str
    predicate: Callable[[BBox], bool]

    def __call__(self, bbox: BBox) -> bool:
        return bool(self.predicate(bbox))


# areas where moving objects can appear; everything else (score digits, clocks) is dropped
REGION_RULES = {
    GameId.BRAWL: RegionFilterRule("Brawl", lambda b: 0.148 < b.y_min and b.y_max < 0.859),
    GameId.PADDLES: RegionFilterRule("Paddles", lambda b: 0.164 < b.y_max and 0.031 < b.y_min),
    GameId.SLALOM: RegionFilterRule("Slalom", lambda b: True),
}


def region_filter(dets: Sequence[Detection], rule: RegionFilterRule) -> list[Detection]:
    return [d for d in dets if rule(d.bbox)]


def localize(
    frame: Frame,
    bg: BackgroundModel,
    rule: RegionFilterRule,
    tau: float = DEFAULT_TAU,
    min_area: int = DEFAULT_MIN_AREA,
) -> list[Detection]:
    """Mask, blob detection and region filtering in one call."""
    return region_filter(detect_blobs(foreground_mask(frame, bg, tau), frame, min_area), rule)
