"""Forest construction: honesty, structure, weights, determinism."""

import numpy as np
import pytest

from mrf.errors import ConfigError, DegenerateWeightsError, PointValidationError
from mrf.forest import (
    ForestConfig,
    ForestModel,
    Leaf,
    SplitNode,
    Tree,
    build_tree,
    fit,
    forest_weights,
    min_child_size,
    predict,
    predict_many,
)
from mrf.metric import distance_matrix
from mrf.spaces import EuclideanInterval, Sphere

EUCLID = EuclideanInterval(low=-100, high=100)


def toy_problem(rng, n, d=3):
    X = rng.uniform(0, 1, (n, d))
    y = list(X @ np.arange(1.0, d + 1.0) + 0.1 * rng.standard_normal(n))
    return X, y


def walk_leaves(tree):
    for node in tree.nodes:
        if isinstance(node, Leaf):
            yield node


class TestConfigValidation:
    @pytest.mark.parametrize(
        "kw",
        [
            dict(n_trees=0),
            dict(subsample_fraction=0.0),
            dict(subsample_fraction=1.5),
            dict(min_leaf=0),
            dict(balance_alpha=0.6),
            dict(balance_alpha=-0.1),
            dict(mtry=0),
            dict(split_rule="entropy"),
            dict(seed=-1),
        ],
    )
    def test_rejects_bad_values(self, kw):
        with pytest.raises(ConfigError):
            ForestConfig(**kw)

    def test_defaults_are_valid(self):
        cfg = ForestConfig()
        assert cfg.n_trees == 100
        assert cfg.split_rule == "medoid"


class TestFitValidation:
    def test_rejects_covariates_outside_unit_cube(self):
        with pytest.raises(ConfigError, match="unit cube"):
            fit(np.array([[0.5], [1.2]]), [0.0, 1.0], EUCLID,
                ForestConfig(n_trees=1, min_leaf=1))

    def test_rejects_too_few_samples(self):
        with pytest.raises(ConfigError, match="at least"):
            fit(np.array([[0.5]]), [0.0], EUCLID, ForestConfig(n_trees=1))

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(ConfigError):
            fit(np.array([[0.5], [0.6]]), [0.0], EUCLID,
                ForestConfig(n_trees=1, min_leaf=1))

    def test_bad_response_reports_its_index(self):
        space = EuclideanInterval(low=0, high=1)
        with pytest.raises(PointValidationError, match="response 1"):
            fit(np.array([[0.1], [0.9]]), [0.5, 4.0], space,
                ForestConfig(n_trees=1, min_leaf=1))


class TestBuildTree:
    def test_depth_one_pure_split(self):
        X = np.array([[0.1], [0.2], [0.8], [0.9]])
        y = [0.0, 0.0, 1.0, 1.0]
        cfg = ForestConfig(n_trees=1, min_leaf=1, balance_alpha=0.25,
                           honesty=False, subsample_fraction=1.0)
        dists = distance_matrix(EUCLID, y)
        rng = np.random.default_rng(0)
        tree = build_tree(X, y, EUCLID, dists, cfg, rng, np.arange(4))
        root = tree.nodes[0]
        assert isinstance(root, SplitNode)
        assert root.feature == 0
        assert root.threshold == pytest.approx(0.5)
        left, right = tree.nodes[root.left], tree.nodes[root.right]
        np.testing.assert_array_equal(left.members, [0, 1])
        np.testing.assert_array_equal(right.members, [2, 3])
        # both children are pure, so they stop above the size band and carry
        # the no-improving-split flag
        assert left.oversized and right.oversized

    def test_honesty_split_sizes_and_disjointness(self):
        rng = np.random.default_rng(81)
        X, y = toy_problem(rng, 31)
        cfg = ForestConfig(n_trees=1, min_leaf=2, seed=4)
        dists = distance_matrix(EUCLID, y)
        sub = np.sort(rng.choice(31, size=17, replace=False))
        tree = build_tree(X, y, EUCLID, dists, cfg, np.random.default_rng(1), sub)
        assert tree.split_half.size == 9  # ceil of 17/2
        assert tree.estimate_half.size == 8
        assert np.intersect1d(tree.split_half, tree.estimate_half).size == 0
        np.testing.assert_array_equal(
            np.union1d(tree.split_half, tree.estimate_half), sub
        )
        for leaf in walk_leaves(tree):
            assert np.isin(leaf.members, tree.estimate_half).all()

    def test_leaf_split_counts_within_band_unless_flagged(self):
        rng = np.random.default_rng(82)
        X, y = toy_problem(rng, 120)
        for rule in ("medoid", "exact_frechet", "two_means"):
            cfg = ForestConfig(n_trees=4, min_leaf=4, split_rule=rule, seed=7)
            model = fit(X, y, EUCLID, cfg)
            for tree in model.trees:
                leaves = list(walk_leaves(tree))
                assert leaves
                for leaf in leaves:
                    if leaf.oversized:
                        assert leaf.n_split >= 2 * cfg.min_leaf
                    elif len(leaves) > 1:
                        assert cfg.min_leaf <= leaf.n_split <= 2 * cfg.min_leaf - 1

    def test_every_split_respects_balance_floor(self):
        rng = np.random.default_rng(83)
        X, y = toy_problem(rng, 90)
        cfg = ForestConfig(n_trees=5, min_leaf=2, balance_alpha=0.25, seed=9)
        model = fit(X, y, EUCLID, cfg)
        for tree in model.trees:
            stack = [(0, tree.split_half)]
            while stack:
                idx, cell = stack.pop()
                node = tree.nodes[idx]
                if isinstance(node, Leaf):
                    continue
                go_left = X[cell, node.feature] <= node.threshold
                left, right = cell[go_left], cell[~go_left]
                floor = min_child_size(cell.size, cfg)
                assert left.size >= floor
                assert right.size >= floor
                stack.append((node.left, left))
                stack.append((node.right, right))


class TestSubsampling:
    def test_size_is_ceiling_of_fraction(self):
        rng = np.random.default_rng(84)
        X, y = toy_problem(rng, 25)
        model = fit(X, y, EUCLID,
                    ForestConfig(n_trees=3, min_leaf=2, subsample_fraction=0.5))
        for tree in model.trees:
            assert tree.subsample.size == 13  # ceil(12.5)
            assert np.unique(tree.subsample).size == 13

    def test_full_fraction_uses_everything(self):
        rng = np.random.default_rng(85)
        X, y = toy_problem(rng, 12)
        model = fit(X, y, EUCLID,
                    ForestConfig(n_trees=2, min_leaf=2, subsample_fraction=1.0))
        for tree in model.trees:
            np.testing.assert_array_equal(tree.subsample, np.arange(12))


class TestForestWeights:
    def test_weights_are_a_distribution_with_honest_support(self):
        rng = np.random.default_rng(86)
        X, y = toy_problem(rng, 40)
        model = fit(X, y, EUCLID, ForestConfig(n_trees=10, min_leaf=3, seed=2))
        allowed = np.zeros(40, dtype=bool)
        for tree in model.trees:
            allowed[tree.estimate_half] = True
        for _ in range(10):
            w = forest_weights(model, rng.uniform(0, 1, 3))
            assert np.all(w >= 0)
            assert np.sum(w) == pytest.approx(1.0, abs=1e-12)
            assert not np.any(w[~allowed] > 0)

    def test_single_tree_weights_are_uniform_on_the_leaf(self):
        rng = np.random.default_rng(87)
        X, y = toy_problem(rng, 20)
        model = fit(X, y, EUCLID, ForestConfig(n_trees=1, min_leaf=3, seed=3))
        tree = model.trees[0]
        x = rng.uniform(0, 1, 3)
        node = tree.nodes[0]
        while isinstance(node, SplitNode):
            node = tree.nodes[
                node.left if x[node.feature] <= node.threshold else node.right
            ]
        w = forest_weights(model, x)
        np.testing.assert_allclose(w[node.members], 1.0 / node.members.size)
        assert np.sum(w > 0) == node.members.size

    def test_empty_leaves_are_excluded_from_the_average(self):
        # two handcrafted stumps: one routes the query to an empty leaf and
        # must drop out of the denominator entirely
        X = np.array([[0.2], [0.8]])
        y = [0.0, 1.0]
        full = Tree(nodes=[Leaf(np.array([0, 1]), 2, False)],
                    subsample=np.arange(2), split_half=np.arange(2),
                    estimate_half=np.arange(2))
        hollow = Tree(nodes=[Leaf(np.array([], dtype=int), 2, False)],
                      subsample=np.arange(2), split_half=np.arange(2),
                      estimate_half=np.array([], dtype=int))
        cfg = ForestConfig(n_trees=2, min_leaf=1)
        model = ForestModel(space=EUCLID, X=X, responses=y, config=cfg,
                            trees=[full, hollow])
        w = forest_weights(model, np.array([0.5]))
        np.testing.assert_array_equal(w, [0.5, 0.5])

    def test_all_empty_leaves_raise(self):
        X = np.array([[0.2], [0.8]])
        hollow = Tree(nodes=[Leaf(np.array([], dtype=int), 2, False)],
                      subsample=np.arange(2), split_half=np.arange(2),
                      estimate_half=np.array([], dtype=int))
        cfg = ForestConfig(n_trees=1, min_leaf=1)
        model = ForestModel(space=EUCLID, X=X, responses=[0.0, 1.0], config=cfg,
                            trees=[hollow])
        with pytest.raises(DegenerateWeightsError):
            forest_weights(model, np.array([0.5]))

    def test_query_shape_checked(self):
        rng = np.random.default_rng(88)
        X, y = toy_problem(rng, 12)
        model = fit(X, y, EUCLID, ForestConfig(n_trees=1, min_leaf=2))
        with pytest.raises(ConfigError, match="query"):
            forest_weights(model, np.zeros(5))


class TestPrediction:
    def test_euclidean_prediction_is_weighted_average(self):
        rng = np.random.default_rng(89)
        X, y = toy_problem(rng, 50)
        model = fit(X, y, EUCLID, ForestConfig(n_trees=20, min_leaf=3, seed=5))
        for _ in range(20):
            x = rng.uniform(0, 1, 3)
            w = forest_weights(model, x)
            assert abs(predict(model, x) - float(np.dot(w, y))) < 1e-12

    def test_predict_counts_exactly_one_solver_call(self):
        rng = np.random.default_rng(90)
        space = EuclideanInterval(low=-100, high=100)
        X, y = toy_problem(rng, 30)
        model = fit(X, y, space, ForestConfig(n_trees=5, min_leaf=3))
        space.solver_calls.reset()
        predict(model, np.full(3, 0.5))
        assert space.solver_calls.value == 1

    def test_predict_many_matches_single_calls(self):
        rng = np.random.default_rng(91)
        X, y = toy_problem(rng, 30)
        model = fit(X, y, EUCLID, ForestConfig(n_trees=5, min_leaf=3))
        queries = rng.uniform(0, 1, (4, 3))
        batch = predict_many(model, queries)
        singles = [predict(model, q) for q in queries]
        assert batch == singles


class TestSolverAccounting:
    def test_medoid_fit_never_calls_solver(self):
        rng = np.random.default_rng(92)
        space = EuclideanInterval(low=-100, high=100)
        X, y = toy_problem(rng, 60)
        space.solver_calls.reset()
        fit(X, y, space, ForestConfig(n_trees=10, min_leaf=3, seed=1))
        assert space.solver_calls.value == 0

    def test_exact_fit_calls_twice_per_scored_candidate(self):
        rng = np.random.default_rng(93)
        space = EuclideanInterval(low=-100, high=100)
        X, y = toy_problem(rng, 40)
        space.solver_calls.reset()
        model = fit(X, y, space,
                    ForestConfig(n_trees=4, min_leaf=4,
                                 split_rule="exact_frechet", seed=6))
        scored = sum(tree.scored_candidates for tree in model.trees)
        assert scored > 0
        assert space.solver_calls.value == 2 * scored

    def test_two_means_fit_calls_twice_per_scored_candidate(self):
        rng = np.random.default_rng(94)
        space = EuclideanInterval(low=-100, high=100)
        X, y = toy_problem(rng, 40)
        space.solver_calls.reset()
        model = fit(X, y, space,
                    ForestConfig(n_trees=4, min_leaf=4,
                                 split_rule="two_means", seed=6))
        scored = sum(tree.scored_candidates for tree in model.trees)
        assert scored > 0
        assert space.solver_calls.value == 2 * scored


class TestDeterminism:
    def test_same_seed_same_forest(self):
        rng = np.random.default_rng(95)
        X, y = toy_problem(rng, 40)
        queries = rng.uniform(0, 1, (6, 3))
        cfg = ForestConfig(n_trees=8, min_leaf=3, seed=11)
        a = fit(X, y, EUCLID, cfg)
        b = fit(X, y, EUCLID, ForestConfig(n_trees=8, min_leaf=3, seed=11))
        for q in queries:
            assert predict(a, q) == predict(b, q)

    def test_parallel_fit_matches_serial(self):
        rng = np.random.default_rng(96)
        X, y = toy_problem(rng, 40)
        queries = rng.uniform(0, 1, (6, 3))
        cfg = ForestConfig(n_trees=8, min_leaf=3, seed=12)
        serial = fit(X, y, EUCLID, cfg, n_jobs=1)
        parallel = fit(X, y, EUCLID, cfg, n_jobs=4)
        for q in queries:
            assert predict(serial, q) == predict(parallel, q)
        for ta, tb in zip(serial.trees, parallel.trees):
            np.testing.assert_array_equal(ta.subsample, tb.subsample)

    def test_different_seeds_differ(self):
        rng = np.random.default_rng(97)
        X, y = toy_problem(rng, 40)
        a = fit(X, y, EUCLID, ForestConfig(n_trees=8, min_leaf=3, seed=1))
        b = fit(X, y, EUCLID, ForestConfig(n_trees=8, min_leaf=3, seed=2))
        queries = rng.uniform(0, 1, (10, 3))
        assert any(predict(a, q) != predict(b, q) for q in queries)

    def test_mtry_subsampling_is_reproducible(self):
        rng = np.random.default_rng(98)
        X, y = toy_problem(rng, 40, d=6)
        cfg = ForestConfig(n_trees=6, min_leaf=3, mtry=2, seed=13)
        a = fit(X, y, EUCLID, cfg)
        b = fit(X, y, EUCLID, ForestConfig(n_trees=6, min_leaf=3, mtry=2, seed=13))
        queries = rng.uniform(0, 1, (5, 6))
        for q in queries:
            assert predict(a, q) == predict(b, q)


class TestSphereForestSmoke:
    def test_fit_and_predict_on_sphere(self):
        rng = np.random.default_rng(99)
        space = Sphere()
        n = 40
        X = rng.uniform(0, 1, (n, 2))
        angles = 0.3 + 0.8 * X[:, 0]
        pts = np.stack([np.cos(angles), np.sin(angles), np.zeros(n)], axis=1)
        noise = rng.standard_normal(n) * 0.05
        pts = np.stack(
            [np.cos(angles + noise), np.sin(angles + noise), np.zeros(n)], axis=1
        )
        model = fit(X, list(pts), space, ForestConfig(n_trees=10, min_leaf=3, seed=8))
        out = predict(model, np.array([0.5, 0.5]))
        assert out.shape == (3,)
        assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-9)
