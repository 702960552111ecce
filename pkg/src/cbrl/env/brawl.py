"""Brawl: top-down boxing. Landing a punch scores one point."""

from __future__ import annotations

import random

import numpy as np

from cbrl.env.core import HEIGHT, WIDTH, Entity, GameId, GameState, draw_number, fill

RING = (110, 156, 66)
ROPE = (180, 50, 40)
PLAYER_COLOR = (214, 214, 214)
ENEMY_COLOR = (0, 0, 0)
CLOCK_COLOR = (252, 252, 84)

RING_X = (0.1, 0.9)
RING_Y = (0.17, 0.84)
PLAYER_SPEED = 0.02
ENEMY_SPEED = 0.008
GAP = 8 / WIDTH  # wider than a glove, so boxers never render as one blob
REACH = 0.09
ALIGN = 0.06
KNOCKBACK = 0.03
PUNCH_TICKS = 4
COOLDOWN = 10
GLOVE_PX = (5, 4)
ENEMY_PUNCH_PROB = 0.1
CHASE_PROB = 0.4  # otherwise the enemy wanders to a random spot in the ring
PHASE_TICKS = (40, 100)
KO_SCORE = 100
MAX_STEPS = 1500

_MOVES = {1: (0.0, -1.0), 2: (0.0, 1.0), 3: (-1.0, 0.0), 4: (1.0, 0.0)}


def reset(seed: int) -> GameState:
    rng = random.Random(seed)
    entities = [
        Entity("player", 0.3, 0.5, 10, 14, PLAYER_COLOR),
        Entity("enemy", 0.7, rng.uniform(0.3, 0.7), 10, 14, ENEMY_COLOR),
    ]
    extra = {"punch": [0, 0], "cooldown": [0, 0], "phase": 0, "chase": True, "target": (0.5, 0.5)}
    return GameState(GameId.BRAWL, entities, [0, 0], 0, rng, extra=extra)


def _overlaps(a: Entity, b: Entity) -> bool:
    return (
        abs(a.x - b.x) < a.half_w + b.half_w + GAP
        and abs(a.y - b.y) < a.half_h + b.half_h + GAP
    )


def _move(me: Entity, other: Entity, dx: float, dy: float) -> None:
    """Move one axis at a time; a move that would make the boxers touch is cancelled."""
    for axis, delta in (("x", dx), ("y", dy)):
        if delta == 0.0:
            continue
        old = getattr(me, axis)
        lo, hi = (RING_X if axis == "x" else RING_Y)
        half = me.half_w if axis == "x" else me.half_h
        setattr(me, axis, min(max(old + delta, lo + half), hi - half))
        if _overlaps(me, other):
            setattr(me, axis, old)


def _in_reach(a: Entity, b: Entity) -> bool:
    gap = abs(a.x - b.x) - a.half_w - b.half_w
    return gap <= REACH and abs(a.y - b.y) <= ALIGN


def _punch(state: GameState, who: int) -> bool:
    """Start a punch for boxer ``who`` (0 player, 1 enemy); True if it lands."""
    extra = state.extra
    if extra["cooldown"][who] > 0:
        return False
    extra["punch"][who] = PUNCH_TICKS
    extra["cooldown"][who] = COOLDOWN
    me, other = state.entities[who], state.entities[1 - who]
    if not _in_reach(me, other):
        return False
    push = KNOCKBACK if other.x > me.x else -KNOCKBACK
    _move(other, me, push, 0.0)
    return True


def _enemy_action(state: GameState) -> tuple[float, float, bool]:
    """Alternate between chasing the player and wandering to a random spot."""
    player, enemy = state.entities
    extra, rng = state.extra, state.rng
    extra["phase"] -= 1
    if extra["phase"] <= 0:
        extra["phase"] = rng.randint(*PHASE_TICKS)
        extra["chase"] = rng.random() < CHASE_PROB
        extra["target"] = (
            rng.uniform(RING_X[0] + enemy.half_w, RING_X[1] - enemy.half_w),
            rng.uniform(RING_Y[0] + enemy.half_h, RING_Y[1] - enemy.half_h),
        )
    if extra["chase"]:
        side = 1.0 if enemy.x >= player.x else -1.0
        tx = player.x + side * (player.half_w + enemy.half_w + GAP + 0.02)
        ty = player.y
    else:
        tx, ty = extra["target"]
    dx = float(np.clip(tx - enemy.x, -ENEMY_SPEED, ENEMY_SPEED))
    dy = float(np.clip(ty - enemy.y, -ENEMY_SPEED, ENEMY_SPEED))
    wants_punch = _in_reach(enemy, player) and state.rng.random() < ENEMY_PUNCH_PROB
    return dx, dy, wants_punch


def step(state: GameState, action: int) -> tuple[GameState, float]:
    player, enemy = state.entities
    extra = state.extra
    for who in (0, 1):
        extra["punch"][who] = max(0, extra["punch"][who] - 1)
        extra["cooldown"][who] = max(0, extra["cooldown"][who] - 1)

    reward = 0.0
    if action in _MOVES:
        ux, uy = _MOVES[action]
        _move(player, enemy, ux * PLAYER_SPEED, uy * PLAYER_SPEED)
    elif action == 5 and _punch(state, 0):
        state.scores[0] += 1
        reward += 1.0

    dx, dy, wants_punch = _enemy_action(state)
    if wants_punch:
        if _punch(state, 1):
            state.scores[1] += 1
            reward -= 1.0
    else:
        _move(enemy, player, dx, dy)

    state.done = max(state.scores) >= KO_SCORE or state.step_index + 1 >= MAX_STEPS
    return state, reward


def backdrop() -> np.ndarray:
    canvas = np.empty((HEIGHT, WIDTH, 3), dtype=np.uint8)
    canvas[:] = RING
    r0, r1 = int(RING_Y[0] * HEIGHT) - 2, int(RING_Y[1] * HEIGHT) + 1
    c0, c1 = int(RING_X[0] * WIDTH) - 2, int(RING_X[1] * WIDTH) + 1
    fill(canvas, (c0, r0, c1 + 1, r0 + 1), ROPE)
    fill(canvas, (c0, r1, c1 + 1, r1 + 1), ROPE)
    fill(canvas, (c0, r0, c0 + 1, r1 + 1), ROPE)
    fill(canvas, (c1, r0, c1 + 1, r1 + 1), ROPE)
    return canvas


def draw_hud(canvas: np.ndarray, state: GameState) -> None:
    draw_number(canvas, state.scores[0], 30, 3, PLAYER_COLOR)
    draw_number(canvas, state.scores[1], 86, 3, ENEMY_COLOR)
    remaining = 1.0 - state.step_index / MAX_STEPS
    length = max(1, int(round(remaining * 60)))
    fill(canvas, (34, 118, 34 + length, 121), CLOCK_COLOR)


def draw_extras(canvas: np.ndarray, state: GameState) -> None:
    """Gloves of boxers that are mid-punch, extended toward the opponent."""
    for who in (0, 1):
        if state.extra["punch"][who] <= 0:
            continue
        me, other = state.entities[who], state.entities[1 - who]
        c0, r0, c1, r1 = me.pixel_box()
        gw, gh = GLOVE_PX
        gr = (r0 + r1) // 2 - gh // 2
        if other.x >= me.x:
            fill(canvas, (c1, gr, c1 + gw, gr + gh), me.color)
        else:
            fill(canvas, (c0 - gw, gr, c0, gr + gh), me.color)


def scripted_action(state: GameState) -> int:
    """Close in on the opponent and punch when in reach."""
    player, enemy = state.entities
    if _in_reach(player, enemy):
        return 5
    if abs(enemy.y - player.y) > ALIGN / 2:
        return 2 if enemy.y > player.y else 1
    return 4 if enemy.x > player.x else 3
