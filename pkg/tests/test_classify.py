import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cbrl.classify import (
    MAX_ITER,
    CentroidSet,
    LabeledDetection,
    UnlabeledCentroidsError,
    classify,
    classify_detections,
    fit_kmeans,
    label_centroids,
)
from cbrl.vision import BBox, Detection


def lloyd_random_restart(x, k, rng):
    """Plain Lloyd from k distinct random samples; returns the final inertia."""
    centers = x[rng.choice(len(x), k, replace=False)].copy()
    for _ in range(MAX_ITER):
        d2 = ((x[:, None, :] - centers[None]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        new = np.array([x[assign == j].mean(axis=0) if (assign == j).any() else centers[j] for j in range(k)])
        if np.allclose(new, centers):
            break
        centers = new
    return float(((x[:, None, :] - centers[None]) ** 2).sum(axis=2).min(axis=1).sum())


def clustered_instance(seed):
    rng = np.random.default_rng(seed)
    k, d = int(rng.integers(1, 4)), int(rng.integers(1, 12))
    n = int(rng.integers(max(k, 3), 51))
    while True:
        means = rng.random((k, d)) * 4
        if k == 1 or min(np.linalg.norm(means[i] - means[j]) for i in range(k) for j in range(i)) > 1.5:
            break
    x = means[np.arange(n) % k] + rng.normal(0, 0.15, (n, d))
    return x, k


def test_k1_gives_the_mean():
    x = np.random.default_rng(0).random((30, 4))
    cs = fit_kmeans(x, 1)
    np.testing.assert_allclose(cs.centroids[0], x.mean(axis=0))


def test_two_blobs_recovered():
    rng = np.random.default_rng(1)
    a = rng.normal((0, 0), 0.1, (100, 2))
    b = rng.normal((3, 3), 0.1, (100, 2))
    cs = fit_kmeans(np.vstack([a, b]), 2, seed=4)
    found = sorted(map(tuple, cs.centroids))
    np.testing.assert_allclose(found[0], a.mean(axis=0), atol=0.05)
    np.testing.assert_allclose(found[1], b.mean(axis=0), atol=0.05)


@given(st.integers(0, 10_000))
def test_inertia_non_increasing(seed):
    rng = np.random.default_rng(seed)
    x = rng.random((40, 3))
    hist = fit_kmeans(x, int(rng.integers(1, 5)), seed=seed).inertia_history
    assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))


def test_deterministic_per_seed():
    x = np.random.default_rng(2).random((60, 5))
    np.testing.assert_array_equal(fit_kmeans(x, 3, 9).centroids, fit_kmeans(x, 3, 9).centroids)


def test_too_few_points():
    with pytest.raises(ValueError):
        fit_kmeans(np.zeros((2, 3)), 3)


def test_duplicate_points_do_not_leave_empty_clusters():
    x = np.array([[0.0, 0.0]] * 10 + [[1.0, 1.0]] * 10 + [[5.0, 5.0]])
    cs = fit_kmeans(x, 3, seed=0)
    assert len({tuple(c) for c in cs.centroids}) == 3


@pytest.mark.parametrize("seed", range(20))
def test_quality_guard_against_best_of_500_restarts(seed):
    x, k = clustered_instance(seed)
    got = fit_kmeans(x, k, seed=seed).inertia
    rng = np.random.default_rng(10_000 + seed)
    best = min(lloyd_random_restart(x, k, rng) for _ in range(500))
    assert got <= 1.05 * best + 1e-12


def _cs(centroids, labels=None):
    return CentroidSet(np.asarray(centroids, dtype=float), labels, ())


class TestLabeling:
    def test_single_label_everywhere(self):
        refs = [(np.random.default_rng(i).random(2), "ball") for i in range(30)]
        assert label_centroids(_cs([[0, 0], [5, 5]]), refs).labels == ("ball", "ball")

    def test_coincident_references(self):
        c = np.array([0.3, 0.7])
        refs = [(c.copy(), "enemy")] * 24 + [(np.array([9.0, 9.0]), "ball")] * 24
        assert label_centroids(_cs([c]), refs).labels == ("enemy",)

    def test_vote_tie_goes_to_smaller_mean_distance(self):
        refs = [(np.array([1.0]), "a")] * 2 + [(np.array([-0.5]), "b")] * 2
        assert label_centroids(_cs([[0.0]]), refs, k_nn=4).labels == ("b",)

    def test_insufficient_references(self):
        with pytest.raises(ValueError):
            label_centroids(_cs([[0.0]]), [(np.zeros(1), "a")] * 23)


class TestClassify:
    def test_self_consistency(self):
        cs = _cs([[0, 0], [1, 0], [0, 1]], ("player", "enemy", "ball"))
        for c, lab in zip(cs.centroids, cs.labels):
            assert classify(c, cs) == lab

    def test_midpoint_goes_to_lower_index(self):
        cs = _cs([[0.0], [2.0]], ("x", "y"))
        assert classify(np.array([1.0]), cs) == "x"

    def test_errors(self):
        with pytest.raises(UnlabeledCentroidsError):
            classify(np.zeros(2), _cs([[0, 0]]))
        with pytest.raises(ValueError):
            classify(np.zeros(3), _cs([[0, 0]], ("a",)))

    def test_classify_detections(self):
        cs = _cs([[0.0], [1.0]], ("a", "b"))
        det = Detection(BBox(0.1, 0.1, 0.2, 0.2), 0.7, np.array([0.9]))
        (ld,) = classify_detections([det], cs)
        assert isinstance(ld, LabeledDetection) and ld.label == "b"
        assert ld.confidence == 0.7 and ld.center == pytest.approx((0.15, 0.15))


def test_text_round_trip(tmp_path):
    cs = _cs(np.random.default_rng(0).random((3, 11)), ("player", "enemy", "ball"))
    cs.save(tmp_path / "c.txt")
    back = CentroidSet.load(tmp_path / "c.txt")
    np.testing.assert_array_equal(back.centroids, cs.centroids)
    assert back.labels == cs.labels
