"""Paddles: a two-paddle ball game. The agent controls the right paddle."""

from __future__ import annotations

import random

import numpy as np

from cbrl.env.core import HEIGHT, WIDTH, Entity, GameId, GameState, draw_number, fill

BACKDROP = (144, 72, 17)
WALL = (236, 236, 236)
PLAYER_COLOR = (92, 186, 92)
ENEMY_COLOR = (213, 130, 74)
BALL_COLOR = (236, 236, 236)

FIELD_TOP = 0.17
FIELD_BOTTOM = 0.95
PLAYER_X = 0.86
ENEMY_X = 0.14

PLAYER_SPEED = 0.03
ENEMY_SPEED = 0.01
BALL_VX = 0.02
MAX_VY = 0.028
SPIN = 0.025
JITTER = 0.02
GAP = 2 / WIDTH
WIN_SCORE = 21
MAX_STEPS = 8000
SERVE_WAIT = 24  # ticks the ball rests at the centre before a serve


def _serve(state: GameState, toward: int) -> None:
    ball = state.find("ball")[0]
    ball.x, ball.y = 0.5, 0.5
    ball.vx = BALL_VX * toward
    ball.vy = state.rng.uniform(0.004, 0.015) * state.rng.choice((-1, 1))
    state.extra["serve_wait"] = SERVE_WAIT


def reset(seed: int) -> GameState:
    rng = random.Random(seed)
    entities = [
        Entity("player", PLAYER_X, 0.56, 4, 16, PLAYER_COLOR),
        Entity("enemy", ENEMY_X, 0.56, 4, 16, ENEMY_COLOR),
        Entity("ball", 0.5, 0.5, 4, 4, BALL_COLOR),
    ]
    state = GameState(GameId.PADDLES, entities, [0, 0], 0, rng)
    _serve(state, rng.choice((-1, 1)))
    return state


def _clamp_paddle(p: Entity) -> None:
    p.y = min(max(p.y, FIELD_TOP + p.half_h), FIELD_BOTTOM - p.half_h)


def _bounce_off(ball: Entity, paddle: Entity, rng: random.Random) -> bool:
    """Reflect ``ball`` if it reaches ``paddle``'s face this tick."""
    if paddle.x > ball.x:
        face = paddle.x - paddle.half_w - GAP
        lead_new = ball.x + ball.half_w
        lead_old = lead_new - ball.vx
        crossed = lead_old < face <= lead_new
    else:
        face = paddle.x + paddle.half_w + GAP
        lead_new = ball.x - ball.half_w
        lead_old = lead_new - ball.vx
        crossed = lead_new <= face < lead_old
    if not crossed or abs(ball.y - paddle.y) > paddle.half_h + ball.half_h:
        return False
    offset = (ball.y - paddle.y) / (paddle.half_h + ball.half_h)
    ball.vx = -ball.vx
    ball.x = face - ball.half_w if paddle.x > ball.x else face + ball.half_w
    ball.vy = float(np.clip(SPIN * offset + rng.uniform(-JITTER, JITTER), -MAX_VY, MAX_VY))
    return True


def step(state: GameState, action: int) -> tuple[GameState, float]:
    player, enemy, ball = state.find("player")[0], state.find("enemy")[0], state.find("ball")[0]
    if action == 1:
        player.y -= PLAYER_SPEED
    elif action == 2:
        player.y += PLAYER_SPEED
    _clamp_paddle(player)
    enemy.y += float(np.clip(ball.y - enemy.y, -ENEMY_SPEED, ENEMY_SPEED))
    _clamp_paddle(enemy)

    if state.extra["serve_wait"] > 0:
        state.extra["serve_wait"] -= 1
        state.done = state.step_index + 1 >= MAX_STEPS
        return state, 0.0
    ball.x += ball.vx
    ball.y += ball.vy
    top, bottom = FIELD_TOP + ball.half_h, FIELD_BOTTOM - ball.half_h
    if ball.y < top:
        ball.y = 2 * top - ball.y
        ball.vy = -ball.vy
    elif ball.y > bottom:
        ball.y = 2 * bottom - ball.y
        ball.vy = -ball.vy
    if ball.vx > 0:
        _bounce_off(ball, player, state.rng)
    else:
        _bounce_off(ball, enemy, state.rng)

    reward = 0.0
    if ball.x > 1.0:
        state.scores[1] += 1
        reward = -1.0
        _serve(state, 1)
    elif ball.x < 0.0:
        state.scores[0] += 1
        reward = 1.0
        _serve(state, 1)
    state.done = max(state.scores) >= WIN_SCORE or state.step_index + 1 >= MAX_STEPS
    return state, reward


def backdrop() -> np.ndarray:
    canvas = np.empty((HEIGHT, WIDTH, 3), dtype=np.uint8)
    canvas[:] = BACKDROP
    fill(canvas, (0, int(0.14 * HEIGHT), WIDTH, int(FIELD_TOP * HEIGHT) + 1), WALL)
    fill(canvas, (0, int(FIELD_BOTTOM * HEIGHT) + 1, WIDTH, int(0.98 * HEIGHT) + 1), WALL)
    return canvas


def draw_hud(canvas: np.ndarray, state: GameState) -> None:
    draw_number(canvas, state.scores[1], 20, 0, ENEMY_COLOR)
    draw_number(canvas, state.scores[0], 100, 0, PLAYER_COLOR)


def scripted_action(state: GameState) -> int:
    """Track the ball's vertical position; never misses."""
    player, ball = state.find("player")[0], state.find("ball")[0]
    target = ball.y + ball.vy
    if target < player.y - PLAYER_SPEED / 2:
        return 1
    if target > player.y + PLAYER_SPEED / 2:
        return 2
    return 0
