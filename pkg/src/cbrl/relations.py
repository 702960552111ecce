"""Relational concepts over tracked objects.

Tracks are mapped onto a fixed set of enumerated slots (``player1``,
``ball1``, ``enemy2`` ...) and a fixed-layout vector of relational concepts
is computed from the slot contents. Concepts touching an empty slot are 0.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from cbrl.env import GameId
from cbrl.track import Track


class Fn(str, Enum):
    POSITION_X = "POSITION_X"
    POSITION_Y = "POSITION_Y"
    DISTANCE = "DISTANCE"
    SPEED = "SPEED"
    LINEAR_TRAJECTORY = "LINEAR_TRAJECTORY"


ARITY = {Fn.POSITION_X: 1, Fn.POSITION_Y: 1, Fn.SPEED: 1, Fn.DISTANCE: 2, Fn.LINEAR_TRAJECTORY: 2}


@dataclass(frozen=True)
class SlotSchema:
    counts: tuple[tuple[str, int], ...]  # (class, max objects), player class first
    player_class: str = "player"

    def __post_init__(self):
        counts = dict(self.counts)
        if counts.get(self.player_class) != 1:
            raise ValueError("the player class must have exactly one slot")

    @property
    def slots(self) -> tuple[str, ...]:
        return tuple(f"{cls}{i}" for cls, n in self.counts for i in range(1, n + 1))

    @property
    def player_slot(self) -> str:
        return f"{self.player_class}1"


SLOT_SCHEMAS = {
    GameId.PADDLES: SlotSchema((("player", 1), ("enemy", 1), ("ball", 1))),
    GameId.BRAWL: SlotSchema((("player", 1), ("enemy", 1))),
    GameId.SLALOM: SlotSchema((("player", 1), ("tree", 2), ("flag", 2), ("mogul", 1))),
}


@dataclass(frozen=True)
class Concept:
    fn: Fn
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.fn.value}({','.join(self.args)})"


_CONCEPT_RE = re.compile(r"^([A-Z_]+)\(([^)]*)\)$")


def parse_concept(text: str) -> Concept:
    m = _CONCEPT_RE.match(text.strip())
    if not m:
        raise ValueError(f"malformed concept {text!r}")
    return Concept(Fn(m.group(1)), tuple(a.strip() for a in m.group(2).split(",")))


@dataclass(frozen=True)
class ConceptSchema:
    slot_schema: SlotSchema
    concepts: tuple[Concept, ...]

    def __post_init__(self):
        declared = set(self.slot_schema.slots)
        for c in self.concepts:
            if len(c.args) != ARITY[c.fn]:
                raise ValueError(f"{c} needs {ARITY[c.fn]} argument(s)")
            missing = [a for a in c.args if a not in declared]
            if missing:
                raise ValueError(f"{c} references undeclared slot(s) {missing}")

    def __len__(self) -> int:
        return len(self.concepts)

    @property
    def names(self) -> list[str]:
        return [str(c) for c in self.concepts]

    def to_text(self) -> str:
        return "".join(f"{i} {c}\n" for i, c in enumerate(self.concepts))

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    @classmethod
    def from_text(cls, text: str, slot_schema: SlotSchema) -> "ConceptSchema":
        concepts = []
        for k, line in enumerate(l for l in text.splitlines() if l.strip()):
            idx, body = line.split(maxsplit=1)
            if int(idx) != k:
                raise ValueError(f"schema line {k} carries index {idx}")
            concepts.append(parse_concept(body))
        return cls(slot_schema, tuple(concepts))


def assign_slots(tracks: Sequence[Track], schema: SlotSchema) -> dict[str, Track | None]:
    """Enumerate tracks into slots by ascending distance to the player.

    Without a player track every slot stays empty.
    """
    out: dict[str, Track | None] = {s: None for s in schema.slots}
    players = sorted((t for t in tracks if t.label == schema.player_class), key=lambda t: t.track_id)
    if not players:
        return out
    player = players[0]
    out[schema.player_slot] = player
    px, py = player.center
    for cls, n in schema.counts:
        if cls == schema.player_class:
            continue
        members = [t for t in tracks if t.label == cls]
        members.sort(key=lambda t: (math.hypot(t.center[0] - px, t.center[1] - py), t.track_id))
        for i, t in enumerate(members[:n], start=1):
            out[f"{cls}{i}"] = t
    return out


def _speed(t: Track) -> float:
    if len(t.history) < 2:
        return 0.0
    (x0, y0), (x1, y1) = t.history[-2], t.history[-1]
    return math.hypot(x1 - x0, y1 - y0)


def _linear_trajectory(a: Track, b: Track) -> float:
    """Distance from ``b``'s centre to the line through ``a``'s last two centres."""
    if len(a.history) < 2:
        return 0.0
    (x0, y0), (x1, y1) = a.history[-2], a.history[-1]
    dx, dy = x1 - x0, y1 - y0
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        return 0.0
    bx, by = b.center
    return abs(dx * (by - y0) - dy * (bx - x0)) / norm


def compute_concepts(assignment: Mapping[str, Track | None], schema: ConceptSchema) -> np.ndarray:
    out = np.zeros(len(schema.concepts))
    for k, c in enumerate(schema.concepts):
        try:
            objs = [assignment[a] for a in c.args]
        except KeyError as exc:
            raise ValueError(f"{c} references slot {exc.args[0]!r} missing from the assignment") from None
        if any(o is None for o in objs):
            continue
        if c.fn is Fn.POSITION_X:
            out[k] = objs[0].center[0]
        elif c.fn is Fn.POSITION_Y:
            out[k] = objs[0].center[1]
        elif c.fn is Fn.SPEED:
            out[k] = _speed(objs[0])
        elif c.fn is Fn.DISTANCE:
            (ax, ay), (bx, by) = objs[0].center, objs[1].center
            out[k] = math.hypot(ax - bx, ay - by)
        else:
            out[k] = _linear_trajectory(objs[0], objs[1])
    return out


def full_schema(game: GameId | str) -> ConceptSchema:
    slots = SLOT_SCHEMAS[GameId.parse(game)]
    names = slots.slots
    concepts = []
    for s in names:
        concepts += [Concept(Fn.POSITION_X, (s,)), Concept(Fn.POSITION_Y, (s,))]
    concepts += [Concept(Fn.SPEED, (s,)) for s in names]
    concepts += [Concept(Fn.DISTANCE, (a, b)) for a in names for b in names if a != b]
    concepts += [Concept(Fn.LINEAR_TRAJECTORY, (a, b)) for a in names for b in names]
    return ConceptSchema(slots, tuple(concepts))


_PRUNED = {
    GameId.PADDLES: (
        "POSITION_X(player1)",
        "POSITION_Y(player1)",
        "POSITION_X(ball1)",
        "POSITION_Y(ball1)",
        "SPEED(ball1)",
        "DISTANCE(player1,ball1)",
        "LINEAR_TRAJECTORY(ball1,player1)",
    ),
    GameId.BRAWL: (
        "POSITION_X(player1)",
        "POSITION_Y(player1)",
        "POSITION_X(enemy1)",
        "POSITION_Y(enemy1)",
        "DISTANCE(player1,enemy1)",
        "SPEED(player1)",
        "SPEED(enemy1)",
    ),
    GameId.SLALOM: (
        "POSITION_X(player1)",
        "POSITION_X(flag1)",
        "POSITION_Y(flag1)",
        "POSITION_X(flag2)",
        "POSITION_X(tree1)",
        "POSITION_Y(tree1)",
        "DISTANCE(player1,tree1)",
        "DISTANCE(player1,mogul1)",
    ),
}


def pruned_schema(game: GameId | str) -> ConceptSchema:
    g = GameId.parse(game)
    return ConceptSchema(SLOT_SCHEMAS[g], tuple(parse_concept(t) for t in _PRUNED[g]))


def schema_for(game: GameId | str, kind: str) -> ConceptSchema:
    if kind == "full":
        return full_schema(game)
    if kind == "pruned":
        return pruned_schema(game)
    raise ValueError(f"unknown schema kind {kind!r}; expected 'full' or 'pruned'")
