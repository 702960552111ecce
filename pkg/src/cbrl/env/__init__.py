"""Deterministic, seedable 2D game simulators.

``reset``/``step`` are functional: ``step`` never mutates its input state.
Positions are normalised to ``[0, 1]^2``; frames are 128x128 RGB.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from cbrl.env import brawl, paddles, slalom
from cbrl.env.core import (
    ACTIONS,
    CLASSES,
    HEIGHT,
    WIDTH,
    EpisodeFinished,
    Frame,
    GameId,
    GameState,
    GroundTruthObject,
    annotate,
    fill,
)

_GAMES = {GameId.PADDLES: paddles, GameId.BRAWL: brawl, GameId.SLALOM: slalom}

# Slalom has no reward contract
REWARD_RANGE = {GameId.PADDLES: (-21.0, 21.0), GameId.BRAWL: (-100.0, 100.0), GameId.SLALOM: (0.0, 0.0)}


def reset(game: GameId | str, seed: int) -> GameState:
    return _GAMES[GameId.parse(game)].reset(int(seed))


def step(state: GameState, action: int) -> tuple[GameState, float, bool]:
    if state.done:
        raise EpisodeFinished(f"{state.game.value} episode finished at step {state.step_index}")
    n_actions = len(ACTIONS[state.game])
    if not 0 <= int(action) < n_actions:
        raise ValueError(f"action {action} outside action set of size {n_actions}")
    new = state.clone()
    new, reward = _GAMES[state.game].step(new, int(action))
    new.step_index += 1
    return new, reward, new.done


@lru_cache(maxsize=None)
def _backdrop(game: GameId) -> np.ndarray:
    canvas = _GAMES[game].backdrop()
    canvas.setflags(write=False)
    return canvas


def backdrop(game: GameId | str) -> np.ndarray:
    """The static background every frame of ``game`` is drawn on."""
    return _backdrop(GameId.parse(game)).copy()


def render(state: GameState) -> Frame:
    module = _GAMES[state.game]
    canvas = _backdrop(state.game).copy()
    module.draw_hud(canvas, state)
    for e in state.entities:
        fill(canvas, e.pixel_box(), e.color)
    if hasattr(module, "draw_extras"):
        module.draw_extras(canvas, state)
    return Frame(canvas, state.step_index)


def ground_truth(state: GameState) -> list[GroundTruthObject]:
    return annotate(state.entities)


def scripted_action(state: GameState) -> int:
    return _GAMES[state.game].scripted_action(state)


def n_actions(game: GameId | str) -> int:
    return len(ACTIONS[GameId.parse(game)])


__all__ = [
    "ACTIONS",
    "CLASSES",
    "HEIGHT",
    "REWARD_RANGE",
    "WIDTH",
    "EpisodeFinished",
    "Frame",
    "GameId",
    "GameState",
    "GroundTruthObject",
    "backdrop",
    "ground_truth",
    "n_actions",
    "render",
    "reset",
    "scripted_action",
    "step",
]
