"""Slalom: a skier passes trees, flag gates and moguls scrolling up the slope.

Used for detection experiments only; it never pays a reward.
"""

from __future__ import annotations

import random

import numpy as np

from cbrl.env.core import HEIGHT, WIDTH, Entity, GameId, GameState

SNOW = (236, 236, 236)
SKIER_COLOR = (214, 92, 92)

# base colour, per-channel jitter, sprite size in pixels
FAMILIES = {
    "tree": ((40, 130, 40), 30, (8, 12)),
    "flag": ((40, 70, 200), 35, (4, 7)),
    "mogul": ((190, 190, 205), 20, (9, 3)),
}
SPAWN_PROB = {"tree": 0.02, "gate": 0.012, "mogul": 0.02}
GATE_WIDTH = 0.2
SCROLL = 0.008
SKIER_SPEED = 0.015
SKIER_Y = 0.2
EPISODE_STEPS = 2000


def _spawn(rng: random.Random, kind: str, y: float) -> list[Entity]:
    if kind == "gate":
        x = rng.uniform(0.08, 0.92 - GATE_WIDTH)
        return [_object(rng, "flag", x, y), _object(rng, "flag", x + GATE_WIDTH, y)]
    return [_object(rng, kind, rng.uniform(0.05, 0.95), y)]


def _object(rng: random.Random, cls: str, x: float, y: float) -> Entity:
    base, jitter, (w, h) = FAMILIES[cls]
    color = tuple(int(np.clip(c + rng.randint(-jitter, jitter), 0, 255)) for c in base)
    return Entity(cls, x, y, w, h, color, vy=-SCROLL)


def reset(seed: int) -> GameState:
    rng = random.Random(seed)
    entities = [Entity("player", 0.5, SKIER_Y, 6, 10, SKIER_COLOR)]
    for kind, count in (("tree", 3), ("gate", 1), ("mogul", 2)):
        for _ in range(count):
            entities += _spawn(rng, kind, rng.uniform(0.35, 0.95))
    return GameState(GameId.SLALOM, entities, [0, 0], 0, rng)


def step(state: GameState, action: int) -> tuple[GameState, float]:
    skier = state.entities[0]
    if action == 1:
        skier.x = max(skier.x - SKIER_SPEED, 0.05)
    elif action == 2:
        skier.x = min(skier.x + SKIER_SPEED, 0.95)
    kept = [skier]
    for e in state.entities[1:]:
        e.y += e.vy
        if e.y + e.half_h > 0.0:
            kept.append(e)
    for kind, p in SPAWN_PROB.items():
        if state.rng.random() < p:
            kept += _spawn(state.rng, kind, 1.0 + 0.06)
    state.entities = kept
    state.done = state.step_index + 1 >= EPISODE_STEPS
    return state, 0.0


def backdrop() -> np.ndarray:
    canvas = np.empty((HEIGHT, WIDTH, 3), dtype=np.uint8)
    canvas[:] = SNOW
    return canvas


def draw_hud(canvas: np.ndarray, state: GameState) -> None:
    pass


def scripted_action(state: GameState) -> int:
    """Steer toward the centre of the next gate below the skier."""
    skier = state.entities[0]
    flags = [e for e in state.entities if e.cls == "flag" and e.y > skier.y]
    if not flags:
        return 0
    nearest = min(flags, key=lambda e: e.y)
    target = nearest.x + GATE_WIDTH / 2 if nearest.x + GATE_WIDTH <= 0.95 else nearest.x - GATE_WIDTH / 2
    if target < skier.x - SKIER_SPEED:
        return 1
    if target > skier.x + SKIER_SPEED:
        return 2
    return 0
