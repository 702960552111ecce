import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbrl import env
from cbrl.classify import LabeledDetection
from cbrl.env import GroundTruthObject
from cbrl.evaluation import (
    NOT_AN_OBJECT,
    NOT_DETECTED,
    ConfusionMatrix,
    center_divergence_score,
    confusion,
    evaluate_agent,
    evaluate_detections,
    match,
    per_class_scores,
    summarize,
)
from cbrl.vision import BBox, Detection
from oracles import divergence, exhaustive_match, micro_prf

CLASSES = ("player", "ball", "enemy")


def det(box, label="ball", conf=1.0):
    return LabeledDetection(Detection(BBox(*box), conf, np.zeros(11)), label)


def gt(box, label="ball"):
    return GroundTruthObject(label, tuple(box))


class TestScore:
    def test_examples(self):
        g = (0.0, 0.0, 0.3, 0.4)  # diagonal 0.5
        assert center_divergence_score(g, g) == 1.0
        assert center_divergence_score((0.25, 0.0, 0.55, 0.4), g) == pytest.approx(0.5)
        assert center_divergence_score((0.6, 0.0, 0.9, 0.4), g) == 0.0
        # the score only looks at centres, not sizes
        assert center_divergence_score((0.1, 0.15, 0.2, 0.25), g) == 1.0

    def test_degenerate_truth(self):
        with pytest.raises(ValueError):
            center_divergence_score((0, 0, 1, 1), (0.5, 0.5, 0.5, 0.5))

    @given(st.lists(st.floats(0, 1), min_size=8, max_size=8))
    def test_matches_oracle_and_bounded(self, v):
        p = (min(v[0], v[1]), min(v[2], v[3]), max(v[0], v[1]), max(v[2], v[3]))
        g = (min(v[4], v[5]), min(v[6], v[7]), max(v[4], v[5]) + 0.01, max(v[6], v[7]) + 0.01)
        s = center_divergence_score(p, g)
        assert 0.0 <= s <= 1.0
        assert s == pytest.approx(divergence(p, g))


class TestMatch:
    def test_confident_detection_takes_the_contested_truth(self):
        truth = [gt((0.4, 0.4, 0.5, 0.5))]
        dets = [det((0.41, 0.4, 0.51, 0.5), conf=0.2), det((0.42, 0.4, 0.52, 0.5), conf=0.9)]
        r = match(dets, truth)
        assert r.pairs == [(1, 0)] and r.unmatched_dets == [0] and r.unmatched_gts == []

    def test_threshold(self):
        truth = [gt((0.0, 0.0, 0.3, 0.4))]
        assert match([det((0.25, 0.0, 0.55, 0.4))], truth).pairs == [(0, 0)]
        assert match([det((0.26, 0.0, 0.56, 0.4))], truth).pairs == []

    def test_empty_sides(self):
        assert match([], [gt((0, 0, 0.1, 0.1))]).unmatched_gts == [0]
        assert match([det((0, 0, 0.1, 0.1))], []).unmatched_dets == [0]

    @settings(max_examples=150)
    @given(st.integers(0, 10_000), st.integers(0, 4), st.integers(0, 4))
    def test_against_exhaustive_oracle(self, seed, nd, ng):
        rng = np.random.default_rng(seed)

        def boxes(n):
            c = rng.random((n, 2)) * 0.3 + 0.35  # crowded, so candidates overlap
            s = rng.random((n, 2)) * 0.15 + 0.02
            return [tuple(np.r_[c[i] - s[i], c[i] + s[i]]) for i in range(n)]

        db, gb = boxes(nd), boxes(ng)
        confs = list(rng.choice([0.3, 0.6, 0.9], nd))
        r = match([det(b, conf=c) for b, c in zip(db, confs)], [gt(b) for b in gb])
        assert r.pairs == exhaustive_match(db, confs, gb)
        assert len(r.pairs) + len(r.unmatched_dets) == nd
        assert len(r.pairs) + len(r.unmatched_gts) == ng


class TestConfusion:
    def hand_example(self):
        """8 correct, 1 mislabel, 1 spurious detection, 1 missed object."""
        truth, dets = [], []
        for k in range(8):
            x = 0.1 * k + 0.02
            truth.append(gt((x, 0.1, x + 0.05, 0.15), CLASSES[k % 3]))
            dets.append(det((x, 0.1, x + 0.05, 0.15), CLASSES[k % 3]))
        truth.append(gt((0.1, 0.5, 0.15, 0.55), "player"))
        dets.append(det((0.1, 0.5, 0.15, 0.55), "enemy"))
        dets.append(det((0.5, 0.8, 0.55, 0.85), "ball"))
        truth.append(gt((0.8, 0.8, 0.85, 0.85), "enemy"))
        return dets, truth

    def test_hand_example(self):
        dets, truth = self.hand_example()
        cm = confusion(match(dets, truth), dets, truth, CLASSES)
        assert cm.counts[0, 2] == 1  # player seen as enemy
        assert cm.counts[3, 1] == 1  # spurious ball
        assert cm.counts[2, 3] == 1  # missed enemy
        assert np.trace(cm.counts[:3, :3]) == 8
        assert summarize(cm) == pytest.approx((0.8, 0.8, 0.8))

    def test_conservation(self):
        dets, truth = self.hand_example()
        cm = confusion(match(dets, truth), dets, truth, CLASSES)
        assert cm.counts[:3, :].sum() == len(truth)
        assert cm.counts[:, :3].sum() == len(dets)
        assert cm.counts[3, 3] == 0

    def test_labels_and_formats(self):
        cm = ConfusionMatrix(CLASSES)
        assert cm.row_labels[-1] == NOT_AN_OBJECT and cm.col_labels[-1] == NOT_DETECTED
        assert cm.to_csv().splitlines()[0] == "truth\\predicted,player,ball,enemy,not_detected"
        assert len(cm.to_text().splitlines()) == 5

    def test_vocabulary_error(self):
        with pytest.raises(ValueError, match="zebra"):
            confusion(match([det((0, 0, 0.1, 0.1), "zebra")], []), [det((0, 0, 0.1, 0.1), "zebra")], [], CLASSES)
        with pytest.raises(ValueError):
            ConfusionMatrix(CLASSES) + ConfusionMatrix(("a",))

    def test_random_matrices_against_loops(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 6))
            counts = rng.integers(0, 20, (n + 1, n + 1))
            counts[n, n] = 0
            cm = ConfusionMatrix(tuple(f"c{i}" for i in range(n)), counts)
            assert summarize(cm) == pytest.approx(micro_prf(counts.tolist(), n))

    def test_empty_matrix_scores_zero(self):
        assert summarize(ConfusionMatrix(CLASSES)) == (0.0, 0.0, 0.0)

    def test_per_class(self):
        dets, truth = self.hand_example()
        scores = per_class_scores(confusion(match(dets, truth), dets, truth, CLASSES))
        assert scores["ball"][1] == 1.0 and scores["player"][1] == pytest.approx(3 / 4)

    def test_pooling_is_permutation_invariant(self):
        dets, truth = self.hand_example()
        rng = np.random.default_rng(1)
        frames = [(dets, truth), (dets[:4], truth[:6]), ([], truth[2:])]
        a = evaluate_detections(frames, CLASSES)
        shuffled = [([x[i] for i in rng.permutation(len(x))], [y[i] for i in rng.permutation(len(y))]) for x, y in frames[::-1]]
        b = evaluate_detections(shuffled, CLASSES)
        np.testing.assert_array_equal(a.counts, b.counts)


class StateEnv:
    """Raw simulator with the game state as the observation."""

    def __init__(self, game):
        self.game = game

    def reset(self, seed):
        self.state = env.reset(self.game, seed)
        return self.state

    def step(self, a):
        self.state, r, done = env.step(self.state, a)
        return self.state, r, done


class TestAgent:
    def test_scripted_paddles_never_concedes(self):
        mean, std, rewards = evaluate_agent(lambda: StateEnv("Paddles"), env.scripted_action, 5)
        assert (mean, std) == (21.0, 0.0) and rewards == [21.0] * 5

    def test_random_paddles_loses(self):
        rng = np.random.default_rng(0)
        mean, _, _ = evaluate_agent(lambda: StateEnv("Paddles"), lambda s: int(rng.integers(3)), 5)
        assert mean < -15

    def test_deterministic_given_seeds(self):
        def run():
            rng = np.random.default_rng(7)
            return evaluate_agent(lambda: StateEnv("Brawl"), lambda s: int(rng.integers(6)), 3, seeds=[4, 5, 6])

        assert run() == run()

    def test_sample_std(self):
        _, std, rewards = evaluate_agent(lambda: StateEnv("Slalom"), lambda s: 0, 2)
        assert std == pytest.approx(np.std(rewards, ddof=1))
        with pytest.raises(ValueError):
            evaluate_agent(lambda: StateEnv("Slalom"), lambda s: 0, 0)
