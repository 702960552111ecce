"""Shared state, rasterisation and annotation code for the simulators."""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

WIDTH = 128
HEIGHT = 128


class GameId(str, Enum):
    PADDLES = "Paddles"
    BRAWL = "Brawl"
    SLALOM = "Slalom"

    @classmethod
    def parse(cls, value: "GameId | str") -> "GameId":
        if isinstance(value, cls):
            return value
        for g in cls:
            if g.value.lower() == str(value).lower():
                return g
        raise ValueError(f"unknown game {value!r}; expected one of {[g.value for g in cls]}")


ACTIONS: dict[GameId, tuple[str, ...]] = {
    GameId.PADDLES: ("NOOP", "UP", "DOWN"),
    GameId.BRAWL: ("NOOP", "UP", "DOWN", "LEFT", "RIGHT", "PUNCH"),
    GameId.SLALOM: ("NOOP", "LEFT", "RIGHT"),
}

# moving object classes per game; the player class comes first
CLASSES: dict[GameId, tuple[str, ...]] = {
    GameId.PADDLES: ("player", "enemy", "ball"),
    GameId.BRAWL: ("player", "enemy"),
    GameId.SLALOM: ("player", "tree", "flag", "mogul"),
}


class EpisodeFinished(RuntimeError):
    """Raised when stepping a state whose episode is already over."""


@dataclass
class Entity:
    cls: str
    x: float  # centre, normalised
    y: float
    w_px: int
    h_px: int
    color: tuple[int, int, int]
    vx: float = 0.0
    vy: float = 0.0

    def pixel_box(self) -> tuple[int, int, int, int]:
        """Unclipped pixel box ``(c0, r0, c1, r1)``, end-exclusive."""
        c0 = int(np.floor(self.x * WIDTH - self.w_px / 2 + 0.5))
        r0 = int(np.floor(self.y * HEIGHT - self.h_px / 2 + 0.5))
        return c0, r0, c0 + self.w_px, r0 + self.h_px

    @property
    def half_w(self) -> float:
        return self.w_px / WIDTH / 2

    @property
    def half_h(self) -> float:
        return self.h_px / HEIGHT / 2


@dataclass
class GameState:
    game: GameId
    entities: list[Entity]
    scores: list[int]  # [player, opponent]
    step_index: int
    rng: random.Random
    done: bool = False
    extra: dict = field(default_factory=dict)

    def clone(self) -> "GameState":
        rng = random.Random()
        rng.setstate(self.rng.getstate())
        return replace(
            self,
            entities=[replace(e) for e in self.entities],
            scores=list(self.scores),
            rng=rng,
            extra=copy.deepcopy(self.extra),
        )

    def find(self, cls: str) -> list[Entity]:
        return [e for e in self.entities if e.cls == cls]


@dataclass(frozen=True)
class Frame:
    pixels: np.ndarray  # (H, W, 3) uint8
    timestep: int

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class GroundTruthObject:
    label: str
    bbox: tuple[float, float, float, float]  # x_min, y_min, x_max, y_max

    @property
    def center(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.bbox
        return (x0 + x1) / 2, (y0 + y1) / 2


def clipped_box(box: tuple[int, int, int, int]) -> tuple[int, int, int, int] | None:
    c0, r0, c1, r1 = box
    c0, r0 = max(c0, 0), max(r0, 0)
    c1, r1 = min(c1, WIDTH), min(r1, HEIGHT)
    if c0 >= c1 or r0 >= r1:
        return None
    return c0, r0, c1, r1


def fill(canvas: np.ndarray, box: tuple[int, int, int, int], color) -> None:
    b = clipped_box(box)
    if b is not None:
        c0, r0, c1, r1 = b
        canvas[r0:r1, c0:c1] = color


# 3x5 bitmap digits, one string per row
_DIGITS = {
    "0": ("111", "101", "101", "101", "111"),
    "1": ("010", "110", "010", "010", "111"),
    "2": ("111", "001", "111", "100", "111"),
    "3": ("111", "001", "111", "001", "111"),
    "4": ("101", "101", "111", "001", "001"),
    "5": ("111", "100", "111", "001", "111"),
    "6": ("111", "100", "111", "101", "111"),
    "7": ("111", "001", "010", "010", "010"),
    "8": ("111", "101", "111", "101", "111"),
    "9": ("111", "101", "111", "001", "111"),
}


def draw_number(canvas: np.ndarray, value: int, col: int, row: int, color) -> None:
    for k, ch in enumerate(str(value)):
        for dr, bits in enumerate(_DIGITS[ch]):
            for dc, bit in enumerate(bits):
                if bit == "1":
                    canvas[row + dr, col + 4 * k + dc] = color


def annotate(entities: list[Entity]) -> list[GroundTruthObject]:
    out = []
    for e in entities:
        b = clipped_box(e.pixel_box())
        if b is None:
            continue
        c0, r0, c1, r1 = b
        out.append(GroundTruthObject(e.cls, (c0 / WIDTH, r0 / HEIGHT, c1 / WIDTH, r1 / HEIGHT)))
    return out
