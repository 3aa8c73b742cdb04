"""Metric core: weights, counters, distance matrices, medoids, variances."""

import threading

import numpy as np
import pytest

from mrf.errors import (
    DegenerateWeightsError,
    PointValidationError,
    WeightValidationError,
)
from mrf.metric import (
    SolverCounter,
    distance_matrix,
    frechet_medoid,
    frechet_variance,
    validate_weights,
    weighted_frechet_mean,
)
from mrf.spaces import EuclideanInterval, Sphere


def random_sphere_points(rng, n):
    pts = rng.standard_normal((n, 3))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


class TestValidateWeights:
    def test_accepts_unit_sum(self):
        w = validate_weights([0.25, 0.75])
        assert w.dtype == float

    def test_rejects_negative(self):
        with pytest.raises(WeightValidationError):
            validate_weights([1.5, -0.5])

    def test_rejects_bad_sum(self):
        with pytest.raises(WeightValidationError):
            validate_weights([0.3, 0.3])

    def test_rejects_nan(self):
        with pytest.raises(WeightValidationError):
            validate_weights([np.nan, 1.0])

    def test_rejects_wrong_length(self):
        with pytest.raises(WeightValidationError):
            validate_weights([1.0], n_expected=2)

    def test_all_zero_is_degenerate(self):
        with pytest.raises(DegenerateWeightsError):
            validate_weights([0.0, 0.0])

    def test_tolerates_tiny_sum_error(self):
        w = np.full(7, 1.0 / 7)
        validate_weights(w / w.sum())


class TestSolverCounter:
    def test_starts_at_zero_and_resets(self):
        c = SolverCounter()
        assert c.value == 0
        c.bump()
        assert c.value == 1
        c.reset()
        assert c.value == 0

    def test_concurrent_bumps_all_land(self):
        c = SolverCounter()

        def hammer():
            for _ in range(1000):
                c.bump()

        threads = [threading.Thread(target=hammer) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert c.value == 8000

    def test_mean_calls_are_counted_but_distances_are_not(self):
        space = EuclideanInterval()
        space.distance(0.0, 1.0)
        assert space.solver_calls.value == 0
        weighted_frechet_mean(space, [0.0, 1.0], [0.5, 0.5])
        assert space.solver_calls.value == 1


class TestDistanceMatrix:
    def test_matches_pairwise_calls_entrywise(self):
        rng = np.random.default_rng(11)
        space = Sphere()
        pts = random_sphere_points(rng, 5)
        mat = distance_matrix(space, list(pts))
        for i in range(5):
            for j in range(i + 1, 5):
                assert mat[i, j] == space.distance(pts[i], pts[j])

    def test_symmetric_zero_diagonal_finite(self):
        rng = np.random.default_rng(12)
        space = Sphere()
        pts = random_sphere_points(rng, 8)
        mat = distance_matrix(space, list(pts))
        assert np.array_equal(mat, mat.T)
        assert np.all(np.diag(mat) == 0.0)
        assert np.all(np.isfinite(mat))

    def test_invalid_sample_reports_index(self):
        space = Sphere()
        pts = [np.array([1.0, 0.0, 0.0]), np.array([3.0, 0.0, 0.0])]
        with pytest.raises(PointValidationError, match="sample 1"):
            distance_matrix(space, pts)


class TestFrechetMedoid:
    def brute_force(self, dists, members):
        best = None
        for c in members:
            score = sum(dists[c, j] ** 2 for j in members)
            if best is None or score < best[0]:
                best = (score, c)
        return best[1]

    def test_matches_brute_force_on_random_masks(self):
        rng = np.random.default_rng(21)
        space = EuclideanInterval(low=-10, high=10)
        for _ in range(30):
            n = int(rng.integers(3, 12))
            pts = list(rng.uniform(-10, 10, n))
            dists = distance_matrix(space, pts)
            members = np.sort(rng.choice(n, size=int(rng.integers(2, n + 1)),
                                         replace=False))
            assert frechet_medoid(dists, members) == self.brute_force(dists, members)

    def test_ties_break_to_lowest_index(self):
        space = EuclideanInterval(low=-10, high=10)
        pts = [1.0, 5.0, 1.0, 5.0]
        dists = distance_matrix(space, pts)
        # all four score 32, so the full set resolves to index 0
        assert frechet_medoid(dists, np.arange(4)) == 0
        # within [1, 2, 3] indices 1 and 3 tie at 16 against 32 for index 2
        assert frechet_medoid(dists, np.array([1, 2, 3])) == 1

    def test_accepts_boolean_mask(self):
        space = EuclideanInterval(low=-10, high=10)
        pts = [0.0, 1.0, 10.0]
        dists = distance_matrix(space, pts)
        mask = np.array([True, True, False])
        assert frechet_medoid(dists, mask) == frechet_medoid(dists, np.array([0, 1]))

    def test_single_member(self):
        space = EuclideanInterval(low=-10, high=10)
        dists = distance_matrix(space, [2.0, 4.0])
        assert frechet_medoid(dists, np.array([1])) == 1

    def test_empty_members_rejected(self):
        with pytest.raises(ValueError):
            frechet_medoid(np.zeros((3, 3)), np.array([], dtype=int))


class TestFrechetVariance:
    def test_constant_set_has_zero_variance(self):
        space = EuclideanInterval(low=-10, high=10)
        pts = [3.0, 3.0, 3.0]
        dists = distance_matrix(space, pts)
        center = frechet_medoid(dists, np.arange(3))
        assert frechet_variance(dists, np.arange(3), center) == 0.0

    def test_hand_computed_value(self):
        space = EuclideanInterval(low=-10, high=10)
        pts = [0.0, 1.0, 4.0]
        dists = distance_matrix(space, pts)
        # distances from index 1: [1, 0, 3] -> mean square (1 + 0 + 9) / 3
        assert frechet_variance(dists, np.arange(3), 1) == pytest.approx(10.0 / 3.0)

    def test_center_outside_members(self):
        space = EuclideanInterval(low=-10, high=10)
        pts = [0.0, 2.0, 9.0]
        dists = distance_matrix(space, pts)
        assert frechet_variance(dists, np.array([0, 1]), 2) == pytest.approx(
            (81.0 + 49.0) / 2.0
        )


class TestPublicValidation:
    def test_frechet_mean_validates_samples(self):
        space = EuclideanInterval(low=0, high=1)
        with pytest.raises(PointValidationError, match="sample 1"):
            weighted_frechet_mean(space, [0.5, 7.0], [0.5, 0.5])

    def test_frechet_mean_rejects_empty(self):
        space = EuclideanInterval()
        with pytest.raises(PointValidationError):
            weighted_frechet_mean(space, [], [])

    def test_distance_validates_both_arguments(self):
        space = EuclideanInterval(low=0, high=1)
        with pytest.raises(PointValidationError):
            space.distance(0.5, 9.0)
