"""Dominance, non-dominated filtering, hypervolume and the log metric."""

import numpy as np
import pytest

from paretomax.pareto import (
    RecommendationSet,
    dominates,
    hypervolume,
    log_hv_rel_diff,
    non_dominated,
)


def brute_force_non_dominated(pts):
    keep = []
    for i in range(len(pts)):
        if not any(dominates(pts[j], pts[i]) for j in range(len(pts)) if j != i):
            keep.append(i)
    return np.array(keep, dtype=int)


class TestDominates:
    def test_basic(self):
        assert dominates((1, 2), (2, 3))
        assert not dominates((1, 2), (1, 2))  # equality is not dominance
        assert not dominates((1, 3), (2, 2))  # incomparable
        assert not dominates((2, 3), (1, 2))

    def test_weak_on_one_axis(self):
        assert dominates((1, 2), (1, 3))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            dominates((1, 2), (1, 2, 3))

    def test_strict_partial_order(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            a, b, c = rng.integers(0, 4, size=(3, 3)).astype(float)
            assert not dominates(a, a)  # irreflexive
            if dominates(a, b):
                assert not dominates(b, a)  # asymmetric
                if dominates(b, c):
                    assert dominates(a, c)  # transitive


class TestNonDominated:
    def test_basic(self):
        idx = non_dominated([[1, 0], [0, 1], [1, 1]])
        assert sorted(idx.tolist()) == [0, 1]

    def test_all_identical_retained(self):
        idx = non_dominated([[2, 2], [2, 2], [2, 2]])
        assert sorted(idx.tolist()) == [0, 1, 2]

    def test_matches_brute_force_2d(self):
        rng = np.random.default_rng(1)
        pts = rng.uniform(size=(50, 2))
        np.testing.assert_array_equal(
            np.sort(non_dominated(pts)), np.sort(brute_force_non_dominated(pts))
        )

    def test_matches_brute_force_with_ties(self):
        rng = np.random.default_rng(2)
        for k in (2, 3, 4):
            for _ in range(30):
                pts = rng.integers(0, 5, size=(rng.integers(1, 30), k)).astype(float)
                np.testing.assert_array_equal(
                    np.sort(non_dominated(pts)),
                    np.sort(brute_force_non_dominated(pts)),
                )

    def test_idempotent(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(size=(40, 3))
        once = pts[non_dominated(pts)]
        twice = once[non_dominated(once)]
        np.testing.assert_array_equal(np.sort(once, axis=0), np.sort(twice, axis=0))

    def test_single_point(self):
        np.testing.assert_array_equal(non_dominated([[1.0, 2.0]]), [0])


class TestHypervolume:
    def test_hand_inclusion_exclusion(self):
        # two unit-offset boxes of area 2 overlapping in a unit square
        assert hypervolume([[1, 0], [0, 1]], [2, 2]) == pytest.approx(3.0)

    def test_empty_front(self):
        assert hypervolume(np.empty((0, 2)), [1, 1]) == 0.0

    def test_violators_clipped_out(self):
        assert hypervolume([[3, 3], [0, 0]], [2, 2]) == pytest.approx(4.0)
        assert hypervolume([[3, 3]], [2, 2]) == 0.0

    def test_single_objective(self):
        assert hypervolume([[0.25], [0.5]], [1.0]) == pytest.approx(0.75)

    def test_dominated_points_ignored(self):
        a = hypervolume([[1, 0], [0, 1]], [2, 2])
        b = hypervolume([[1, 0], [0, 1], [1.5, 1.5], [1, 0]], [2, 2])
        assert a == pytest.approx(b)

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_matches_monte_carlo(self, k):
        rng = np.random.default_rng(10 + k)
        for _ in range(3):
            pts = rng.uniform(0, 1, size=(6, k))
            ref = np.full(k, 1.2)
            exact = hypervolume(pts, ref)
            m = 1_000_000
            smp = rng.uniform(0, 1.2, size=(m, k))
            dom = np.zeros(m, dtype=bool)
            for p in pts:
                dom |= np.all(p <= smp, axis=1)
            frac = dom.mean()
            mc = frac * 1.2**k
            sigma = 1.2**k * np.sqrt(frac * (1 - frac) / m)
            assert abs(exact - mc) < 3 * sigma + 1e-12

    def test_cube_corner(self):
        # single point at origin dominates the whole box to the reference
        assert hypervolume([[0, 0, 0]], [1, 2, 3]) == pytest.approx(6.0)
        assert hypervolume([[0, 0, 0, 0]], [1, 1, 2, 2]) == pytest.approx(4.0)

    def test_monotone_under_added_point(self):
        rng = np.random.default_rng(4)
        ref = np.full(3, 1.5)
        pts = rng.uniform(size=(8, 3))
        base = hypervolume(pts, ref)
        more = hypervolume(np.vstack([pts, rng.uniform(size=(1, 3))]), ref)
        assert more >= base - 1e-12

    def test_mc_fallback_five_objectives(self):
        # orthant from a single corner point has known volume
        pts = [[0.0] * 5]
        got = hypervolume(pts, [1.0] * 5)
        assert got == pytest.approx(1.0, abs=0.01)


class TestLogHvRelDiff:
    def test_perfect_recommendation_floor(self):
        assert log_hv_rel_diff(2.0, 2.0) == pytest.approx(np.log(1e-8 / 2.0))

    def test_zero_recovery(self):
        assert log_hv_rel_diff(0.0, 2.0) == pytest.approx(0.0, abs=1e-7)

    def test_half_recovery(self):
        assert log_hv_rel_diff(1.0, 2.0) == pytest.approx(np.log(0.5), abs=1e-7)

    def test_overshoot_clamps_with_warning(self):
        with pytest.warns(UserWarning):
            v = log_hv_rel_diff(2.5, 2.0)
        assert v == pytest.approx(np.log(1e-8 / 2.0))

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            log_hv_rel_diff(1.0, 0.0)
        with pytest.raises(ValueError):
            log_hv_rel_diff(-0.5, 1.0)


class TestRecommendationSet:
    def test_alignment_enforced(self):
        with pytest.raises(ValueError):
            RecommendationSet(np.zeros((3, 2)), np.zeros((2, 2)))

    def test_default_feasible(self):
        rec = RecommendationSet(np.zeros((3, 2)), np.zeros((3, 2)))
        assert rec.feasible.all()
        assert len(rec) == 3
