import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cbrl.env import GameId
from cbrl.relations import (
    SLOT_SCHEMAS,
    Concept,
    ConceptSchema,
    Fn,
    SlotSchema,
    assign_slots,
    compute_concepts,
    full_schema,
    parse_concept,
    pruned_schema,
)
from cbrl.track import Track


def track(tid, label, *centers):
    return Track(tid, label, [tuple(c) for c in centers], None)


PADDLE_SLOTS = SLOT_SCHEMAS[GameId.PADDLES]


def schema(*texts, slots=PADDLE_SLOTS):
    return ConceptSchema(slots, tuple(parse_concept(t) for t in texts))


class TestAssignSlots:
    def test_nearer_enemy_wins_the_slot(self):
        slots = SlotSchema((("player", 1), ("enemy", 1)))
        p = track(0, "player", (0.5, 0.5))
        far, near = track(1, "enemy", (0.8, 0.5)), track(2, "enemy", (0.6, 0.5))
        out = assign_slots([p, far, near], slots)
        assert out == {"player1": p, "enemy1": near}

    def test_no_tracks(self):
        assert assign_slots([], PADDLE_SLOTS) == {"player1": None, "enemy1": None, "ball1": None}

    def test_no_player_means_all_empty(self):
        out = assign_slots([track(0, "ball", (0.1, 0.1))], PADDLE_SLOTS)
        assert set(out.values()) == {None}

    def test_ties_go_to_lower_track_id(self):
        slots = SlotSchema((("player", 1), ("tree", 1)))
        p = track(0, "player", (0.5, 0.5))
        a, b = track(7, "tree", (0.6, 0.5)), track(3, "tree", (0.4, 0.5))
        assert assign_slots([p, a, b], slots)["tree1"] is b

    def test_permutation_invariant(self):
        slots = SLOT_SCHEMAS[GameId.SLALOM]
        tracks = [
            track(0, "player", (0.5, 0.2)),
            track(1, "tree", (0.1, 0.6)),
            track(2, "tree", (0.9, 0.9)),
            track(3, "flag", (0.4, 0.5)),
            track(4, "flag", (0.6, 0.5)),
            track(5, "mogul", (0.3, 0.3)),
        ]
        full = full_schema(GameId.SLALOM)
        ref = compute_concepts(assign_slots(tracks, slots), full)
        for perm in itertools.islice(itertools.permutations(tracks), 0, None, 37):
            out = assign_slots(list(perm), slots)
            assert {k: v.track_id for k, v in out.items()} == {
                "player1": 0, "tree1": 1, "tree2": 2, "flag1": 3, "flag2": 4, "mogul1": 5
            }
            np.testing.assert_array_equal(compute_concepts(out, full), ref)


class TestConcepts:
    def test_distance(self):
        a = {"player1": track(0, "player", (0, 0)), "enemy1": None, "ball1": track(1, "ball", (0.3, 0.4))}
        assert compute_concepts(a, schema("DISTANCE(player1,ball1)"))[0] == pytest.approx(0.5)

    def test_speed_needs_two_points(self):
        a = {"player1": None, "enemy1": None, "ball1": track(1, "ball", (0.3, 0.4))}
        assert compute_concepts(a, schema("SPEED(ball1)"))[0] == 0.0
        a["ball1"] = track(1, "ball", (0.3, 0.4), (0.33, 0.44))
        assert compute_concepts(a, schema("SPEED(ball1)"))[0] == pytest.approx(0.05)

    def test_linear_trajectory(self):
        ball = track(1, "ball", (0.0, 0.5), (0.1, 0.5))  # moving along y = 0.5
        player = track(0, "player", (0.9, 0.8))
        a = {"player1": player, "enemy1": None, "ball1": ball}
        vals = compute_concepts(a, schema("LINEAR_TRAJECTORY(ball1,player1)", "LINEAR_TRAJECTORY(ball1,ball1)"))
        np.testing.assert_allclose(vals, [0.3, 0.0])

    def test_empty_slots_are_zero(self):
        full = full_schema(GameId.PADDLES)
        empty = {s: None for s in PADDLE_SLOTS.slots}
        np.testing.assert_array_equal(compute_concepts(empty, full), np.zeros(len(full)))

    def test_missing_slot_in_assignment(self):
        with pytest.raises(ValueError):
            compute_concepts({"player1": None}, schema("SPEED(ball1)"))

    @given(
        st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=4),
        st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=4),
    )
    def test_finite_and_pure(self, ph, bh):
        a = {"player1": track(0, "player", *ph), "enemy1": None, "ball1": track(1, "ball", *bh)}
        full = full_schema(GameId.PADDLES)
        v1, v2 = compute_concepts(a, full), compute_concepts(a, full)
        assert np.isfinite(v1).all()
        np.testing.assert_array_equal(v1, v2)


class TestSchemas:
    def test_undeclared_slot_rejected(self):
        with pytest.raises(ValueError):
            schema("SPEED(ball2)")
        with pytest.raises(ValueError):
            ConceptSchema(PADDLE_SLOTS, (Concept(Fn.DISTANCE, ("player1",)),))

    def test_three_slot_counts(self):
        full = full_schema(GameId.PADDLES)
        fns = [c.fn for c in full.concepts]
        assert fns.count(Fn.DISTANCE) == 6 and fns.count(Fn.LINEAR_TRAJECTORY) == 9

    @pytest.mark.parametrize("game", list(GameId))
    def test_general_counts_and_pruned_subset(self, game):
        n = len(SLOT_SCHEMAS[game].slots)
        full = full_schema(game)
        fns = [c.fn for c in full.concepts]
        assert fns.count(Fn.DISTANCE) == n * (n - 1)
        assert fns.count(Fn.LINEAR_TRAJECTORY) == n * n
        pruned = pruned_schema(game)
        assert len(pruned) < len(full)
        assert set(pruned.concepts) <= set(full.concepts)

    def test_paddles_pruned_length(self):
        assert len(pruned_schema(GameId.PADDLES)) == 7

    def test_text_round_trip(self):
        full = full_schema(GameId.BRAWL)
        back = ConceptSchema.from_text(full.to_text(), full.slot_schema)
        assert back == full and back.digest() == full.digest()

    def test_slot_schema_needs_single_player(self):
        with pytest.raises(ValueError):
            SlotSchema((("player", 2), ("ball", 1)))
