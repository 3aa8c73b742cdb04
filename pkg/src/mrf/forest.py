"""Honest, balanced random forests for metric-space responses.

Trees are grown on subsamples drawn without replacement; under honesty each
subsample is split 50/50 into a half that chooses the splits and a half whose
points populate the leaves.  Three split rules share the same admissibility
constraints (child size >= max(1, min_leaf, ceil(alpha * m))):

- ``medoid``: scores every candidate split from a precomputed distance matrix
  by replacing child means with child medoids; fitting performs zero
  weighted-Fréchet-mean solver calls.
- ``exact_frechet``: scores every candidate split with exact child Fréchet
  variances (two solver calls per admissible threshold).
- ``two_means``: per feature, clusters the coordinate by 1-d Lloyd iteration
  into two groups and scores only that boundary (two solver calls per
  non-degenerate feature).

A fitted forest predicts by turning leaf co-membership counts into weights
over the training responses and taking one weighted Fréchet mean per query.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, DegenerateWeightsError
from .metric import MetricSpace, distance_matrix

SPLIT_RULES = ("medoid", "exact_frechet", "two_means")
LLOYD_MAX_ITER = 50


@dataclass
class ForestConfig:
    n_trees: int = 100
    subsample_fraction: float = 0.5
    honesty: bool = True
    min_leaf: int = 5
    balance_alpha: float = 0.05
    mtry: int | None = None
    split_rule: str = "medoid"
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if not (0.0 < self.subsample_fraction <= 1.0):
            raise ConfigError(
                f"subsample_fraction must be in (0, 1], got {self.subsample_fraction}"
            )
        if self.min_leaf < 1:
            raise ConfigError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if not (0.0 <= self.balance_alpha <= 0.5):
            raise ConfigError(
                f"balance_alpha must be in [0, 0.5], got {self.balance_alpha}"
            )
        if self.mtry is not None and self.mtry < 1:
            raise ConfigError(f"mtry must be >= 1 or None, got {self.mtry}")
        if self.split_rule not in SPLIT_RULES:
            raise ConfigError(
                f"unknown split rule {self.split_rule!r}; choose from {SPLIT_RULES}"
            )
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")


class Split(NamedTuple):
    feature: int
    threshold: float
    score: float
    n_scored: int  # admissible candidates scored with the mean solver


@dataclass
class SplitNode:
    feature: int
    threshold: float
    left: int
    right: int


@dataclass
class Leaf:
    members: np.ndarray  # estimation-half indices, sorted; may be empty
    n_split: int  # split-half size that stopped the recursion
    oversized: bool  # kept above 2*min_leaf - 1 because no split improved


@dataclass
class Tree:
    nodes: list
    subsample: np.ndarray
    split_half: np.ndarray
    estimate_half: np.ndarray
    scored_candidates: int = 0


def min_child_size(m: int, config: ForestConfig) -> int:
    """Smallest admissible child: balance fraction and leaf feasibility."""
    balanced = int(math.ceil(config.balance_alpha * m - 1e-9))
    return max(1, config.min_leaf, balanced)


def _candidate_features(d: int, config: ForestConfig, rng) -> np.ndarray:
    if config.mtry is None or config.mtry >= d:
        return np.arange(d)
    if rng is None:
        raise ConfigError("mtry sampling requires an rng")
    return np.sort(rng.choice(d, size=config.mtry, replace=False))


def _argmin_lowest_index(values: np.ndarray, original: np.ndarray) -> int:
    """Position of the minimum; exact ties resolve to the lowest original index."""
    lowest = values.min()
    ties = np.flatnonzero(values == lowest)
    if ties.size == 1:
        return int(ties[0])
    return int(ties[np.argmin(original[ties])])


class MedoidSweep(NamedTuple):
    positions: np.ndarray  # left-child sizes p with a distinct-value boundary
    thresholds: np.ndarray  # midpoint between the bracketing coordinates
    left_medoids: np.ndarray  # global index of the left-child medoid at p
    right_medoids: np.ndarray  # global index of the right-child medoid at p
    scores: np.ndarray  # (sum of squared distances to child medoids) / m


def medoid_split_scores(
    cell: np.ndarray,
    X: np.ndarray,
    dists: np.ndarray,
    feature: int,
    min_child: int,
) -> MedoidSweep:
    """Score every admissible threshold of one feature against child medoids.

    Cumulative sums over the coordinate-sorted squared-distance submatrix —
    prefix sums for left children, suffix sums for right children — give, for
    every left-child size p, the summed squared distance of each member to
    every candidate medoid; masked minima then select both child medoids, so
    the whole sweep costs O(m^2) rather than O(m^3).  Right children use a
    genuine suffix accumulation (not total minus prefix) so that equal
    candidates produce bitwise-equal sums and ties resolve deterministically.
    """
    m = cell.size
    empty = MedoidSweep(*(np.empty(0, dtype=t) for t in (int, float, int, int, float)))
    lo, hi = min_child, m - min_child
    if lo > hi:
        return empty

    order = np.argsort(X[cell, feature], kind="stable")
    coords = X[cell, feature][order]
    members = cell[order]
    sq = dists[np.ix_(members, members)]
    sq = sq * sq

    csum = np.cumsum(sq, axis=0)
    rsum = np.cumsum(sq[::-1], axis=0)[::-1]  # rsum[p] sums rows p..m-1
    p_vals = np.arange(lo, hi + 1)
    cols = np.arange(m)
    in_left = cols[None, :] < p_vals[:, None]
    left_sums = np.where(in_left, csum[lo - 1 : hi], np.inf)
    right_sums = np.where(in_left, np.inf, rsum[lo : hi + 1])

    left_num = left_sums.min(axis=1)
    right_num = right_sums.min(axis=1)
    left_pos = np.argmin(left_sums, axis=1)
    right_pos = np.argmin(right_sums, axis=1)
    # exact ties between candidate medoids resolve to the lowest global index
    for r in np.flatnonzero(
        (left_sums == left_num[:, None]).sum(axis=1) > 1
    ):
        left_pos[r] = _argmin_lowest_index(left_sums[r], members)
    for r in np.flatnonzero(
        (right_sums == right_num[:, None]).sum(axis=1) > 1
    ):
        right_pos[r] = _argmin_lowest_index(right_sums[r], members)

    valid = coords[p_vals - 1] < coords[p_vals]
    p_vals = p_vals[valid]
    return MedoidSweep(
        positions=p_vals,
        thresholds=0.5 * (coords[p_vals - 1] + coords[p_vals]),
        left_medoids=members[left_pos[valid]],
        right_medoids=members[right_pos[valid]],
        scores=(left_num[valid] + right_num[valid]) / m,
    )


def best_split_medoid(
    cell: np.ndarray,
    X: np.ndarray,
    dists: np.ndarray,
    config: ForestConfig,
    rng=None,
) -> Split | None:
    """Best medoid-scored split, or None when nothing strictly improves."""
    m = cell.size
    if m < 2 * config.min_leaf:
        return None
    min_child = min_child_size(m, config)
    best: Split | None = None
    for feature in _candidate_features(X.shape[1], config, rng):
        sweep = medoid_split_scores(cell, X, dists, int(feature), min_child)
        if sweep.positions.size == 0:
            continue
        i = int(np.argmin(sweep.scores))
        if best is None or sweep.scores[i] < best.score:
            best = Split(int(feature), float(sweep.thresholds[i]),
                         float(sweep.scores[i]), 0)
    if best is None:
        return None
    # a split must strictly improve on the parent's own medoid objective
    sq = dists[np.ix_(cell, cell)]
    sq = sq * sq
    parent_score = float(sq.sum(axis=0).min()) / m
    if best.score >= parent_score:
        return None
    return best


def _responses_identical(space: MetricSpace, responses: Sequence, cell: np.ndarray) -> bool:
    first = responses[cell[0]]
    return all(space._distance(first, responses[i]) == 0.0 for i in cell[1:])


def _score_children(
    space: MetricSpace,
    responses: Sequence,
    left_idx: np.ndarray,
    right_idx: np.ndarray,
) -> float:
    """Size-weighted sum of exact child Fréchet variances (two solver calls)."""
    m = left_idx.size + right_idx.size
    err = 0.0
    for idx in (left_idx, right_idx):
        pts = [responses[i] for i in idx]
        center = space.mean_unchecked(pts, np.full(idx.size, 1.0 / idx.size))
        var = sum(space._distance(p, center) ** 2 for p in pts) / idx.size
        err += (idx.size / m) * var
    return err


def best_split_exact(
    cell: np.ndarray,
    X: np.ndarray,
    responses: Sequence,
    space: MetricSpace,
    config: ForestConfig,
    rng=None,
) -> Split | None:
    """Best split under exact child Fréchet variances."""
    m = cell.size
    if m < 2 * config.min_leaf:
        return None
    if _responses_identical(space, responses, cell):
        return None
    min_child = min_child_size(m, config)
    lo, hi = min_child, m - min_child
    if lo > hi:
        return None
    best: Split | None = None
    scored = 0
    for feature in _candidate_features(X.shape[1], config, rng):
        order = np.argsort(X[cell, feature], kind="stable")
        coords = X[cell, feature][order]
        members = cell[order]
        for p in range(lo, hi + 1):
            if coords[p - 1] >= coords[p]:
                continue
            err = _score_children(space, responses, members[:p], members[p:])
            scored += 1
            if best is None or err < best.score:
                best = Split(int(feature), float(0.5 * (coords[p - 1] + coords[p])),
                             float(err), 0)
    if best is None:
        return None
    return best._replace(n_scored=scored)


def lloyd_two_means(values: np.ndarray, max_iter: int = LLOYD_MAX_ITER) -> np.ndarray | None:
    """Cluster 1-d values into two groups; returns the upper-cluster mask.

    Centers start at the min and max; points equidistant from both centers
    join the lower cluster.  Returns None when all values coincide.
    """
    c1 = float(values.min())
    c2 = float(values.max())
    if c1 == c2:
        return None
    upper = values > 0.5 * (c1 + c2)
    for _ in range(max_iter):
        n1 = float(values[~upper].mean())
        n2 = float(values[upper].mean())
        if n1 == c1 and n2 == c2:
            break
        c1, c2 = n1, n2
        upper = values > 0.5 * (c1 + c2)
    return upper


def best_split_two_means(
    cell: np.ndarray,
    X: np.ndarray,
    responses: Sequence,
    space: MetricSpace,
    config: ForestConfig,
    rng=None,
) -> Split | None:
    """Best split among per-feature 2-means boundaries."""
    m = cell.size
    if m < 2 * config.min_leaf:
        return None
    if _responses_identical(space, responses, cell):
        return None
    min_child = min_child_size(m, config)
    best: Split | None = None
    scored = 0
    for feature in _candidate_features(X.shape[1], config, rng):
        coords = X[cell, feature]
        upper = lloyd_two_means(coords)
        if upper is None:
            continue
        p = int(m - upper.sum())
        if p < min_child or m - p < min_child:
            continue
        threshold = 0.5 * (float(coords[~upper].max()) + float(coords[upper].min()))
        left_idx = cell[~upper]
        right_idx = cell[upper]
        err = _score_children(space, responses, left_idx, right_idx)
        scored += 1
        if best is None or err < best.score:
            best = Split(int(feature), threshold, float(err), 0)
    if best is None:
        return None
    return best._replace(n_scored=scored)


def _find_split(cell, X, responses, space, dists, config, rng) -> Split | None:
    if config.split_rule == "medoid":
        return best_split_medoid(cell, X, dists, config, rng)
    if config.split_rule == "exact_frechet":
        return best_split_exact(cell, X, responses, space, config, rng)
    return best_split_two_means(cell, X, responses, space, config, rng)


def build_tree(
    X: np.ndarray,
    responses: Sequence,
    space: MetricSpace,
    dists: np.ndarray | None,
    config: ForestConfig,
    rng,
    subsample: np.ndarray,
) -> Tree:
    """Grow one tree on a subsample (honesty splits it into two halves)."""
    if config.honesty:
        perm = rng.permutation(subsample)
        half = (subsample.size + 1) // 2
        split_half = np.sort(perm[:half])
        estimate_half = np.sort(perm[half:])
    else:
        split_half = np.sort(subsample)
        estimate_half = split_half

    nodes: list = []
    scored_total = 0

    def recurse(split_idx: np.ndarray, est_idx: np.ndarray) -> int:
        nonlocal scored_total
        m = split_idx.size
        split = None
        if m >= 2 * config.min_leaf:
            split = _find_split(split_idx, X, responses, space, dists, config, rng)
        if split is None:
            nodes.append(Leaf(
                members=np.sort(est_idx),
                n_split=m,
                oversized=m >= 2 * config.min_leaf,
            ))
            return len(nodes) - 1
        scored_total += split.n_scored
        pos = len(nodes)
        nodes.append(None)
        go_left = X[split_idx, split.feature] <= split.threshold
        est_left = X[est_idx, split.feature] <= split.threshold
        left = recurse(split_idx[go_left], est_idx[est_left])
        right = recurse(split_idx[~go_left], est_idx[~est_left])
        nodes[pos] = SplitNode(split.feature, split.threshold, left, right)
        return pos

    recurse(split_half, estimate_half)
    return Tree(
        nodes=nodes,
        subsample=np.sort(subsample),
        split_half=split_half,
        estimate_half=estimate_half,
        scored_candidates=scored_total,
    )


@dataclass
class ForestModel:
    space: MetricSpace
    X: np.ndarray
    responses: list
    config: ForestConfig
    trees: list = field(default_factory=list)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    def weights(self, x) -> np.ndarray:
        return forest_weights(self, x)

    def predict(self, x):
        return predict(self, x)


def _tree_rng(seed: int, tree_index: int):
    """Independent, reproducible stream for one tree."""
    return np.random.default_rng(np.random.SeedSequence([seed, tree_index]))


def fit(
    X,
    responses: Sequence,
    space: MetricSpace,
    config: ForestConfig | None = None,
    n_jobs: int = 1,
) -> ForestModel:
    """Fit a forest.  Parallel and serial fits are identical for a given seed.

    The distance matrix needed by the medoid rule is computed here, once.
    """
    config = config or ForestConfig()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ConfigError(f"X must be 2-d, got shape {X.shape}")
    n = X.shape[0]
    if len(responses) != n:
        raise ConfigError(f"{len(responses)} responses for {n} covariate rows")
    if np.any(X < 0.0) or np.any(X > 1.0) or not np.all(np.isfinite(X)):
        raise ConfigError("covariate rows must lie in the unit cube")
    if n < 2 * config.min_leaf:
        raise ConfigError(
            f"need at least {2 * config.min_leaf} samples, got {n}"
        )
    responses = list(responses)
    for i, point in enumerate(responses):
        try:
            space.validate(point)
        except Exception as err:
            raise type(err)(f"response {i}: {err}") from None

    dists = distance_matrix(space, responses) if config.split_rule == "medoid" else None
    size = max(1, int(math.ceil(config.subsample_fraction * n - 1e-9)))

    def grow(b: int) -> Tree:
        rng = _tree_rng(config.seed, b)
        subsample = rng.choice(n, size=size, replace=False)
        return build_tree(X, responses, space, dists, config, rng, subsample)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(grow, range(config.n_trees)))
    else:
        trees = [grow(b) for b in range(config.n_trees)]
    return ForestModel(space=space, X=X, responses=responses, config=config, trees=trees)


def _route(tree: Tree, x: np.ndarray) -> Leaf:
    node = tree.nodes[0]
    while isinstance(node, SplitNode):
        node = tree.nodes[node.left if x[node.feature] <= node.threshold else node.right]
    return node


def forest_weights(model: ForestModel, x) -> np.ndarray:
    """Average leaf co-membership weights over trees with nonempty leaves."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.X.shape[1],):
        raise ConfigError(
            f"query has shape {x.shape}, expected ({model.X.shape[1]},)"
        )
    acc = np.zeros(model.n_samples)
    contributing = 0
    for tree in model.trees:
        leaf = _route(tree, x)
        if leaf.members.size:
            acc[leaf.members] += 1.0 / leaf.members.size
            contributing += 1
    if contributing == 0:
        raise DegenerateWeightsError("every tree routed the query to an empty leaf")
    acc /= contributing
    return acc / acc.sum()


def predict(model: ForestModel, x):
    """One weighted Fréchet mean under the query's forest weights."""
    w = forest_weights(model, x)
    return model.space.mean_unchecked(model.responses, w)


def predict_many(model: ForestModel, X) -> list:
    return [predict(model, row) for row in np.asarray(X, dtype=float)]
