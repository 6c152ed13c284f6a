"""Random forest of Gini-impurity decision trees, built from scratch."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import rng as rngmod
from .config import TrainConfig, TrainingError

_FOREST_SUB = 11


@dataclass(eq=False)
class DecisionTree:
    """Flat array representation; ``feature[k] == -1`` marks a leaf.

    Rows with ``x[feature] <= threshold`` go left.  ``counts[k]`` holds the
    class-0/class-1 training counts reaching node ``k``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaf_ids(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(len(x), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            k = node[idx]
            go_left = x[idx, self.feature[k]] <= self.threshold[k]
            node[idx] = np.where(go_left, self.left[k], self.right[k])
            active[idx] = self.feature[node[idx]] >= 0
        return node

    def predict(self, x: np.ndarray) -> np.ndarray:
        c = self.counts[self.leaf_ids(x)]
        return (c[:, 1] > c[:, 0]).astype(np.int64)

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for k in range(self.n_nodes):
            if self.feature[k] >= 0:
                depth[self.left[k]] = depth[self.right[k]] = depth[k] + 1
        return int(depth.max())


def gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def _best_split_on_feature(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float] | None:
    """Lowest weighted child Gini over midpoints of distinct sorted values."""
    order = np.argsort(xs, kind="stable")
    xs, ys = xs[order], ys[order]
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return None
    n = len(xs)
    n_left = np.arange(1, n)
    ones_left = np.cumsum(ys)[:-1]
    ones_total = ys.sum()
    n_right = n - n_left
    ones_right = ones_total - ones_left
    p_l = ones_left / n_left
    p_r = ones_right / n_right
    weighted = (n_left * 2 * p_l * (1 - p_l) + n_right * 2 * p_r * (1 - p_r)) / n
    weighted = np.where(valid, weighted, np.inf)
    j = int(np.argmin(weighted))
    thr = (xs[j] + xs[j + 1]) / 2
    if not thr < xs[j + 1]:  # adjacent floats: midpoint rounds up
        thr = xs[j]
    return float(weighted[j]), float(thr)


def build_tree(
    x: np.ndarray,
    y: np.ndarray,
    max_depth: int | None,
    features_per_split: int,
    gen: np.random.Generator,
) -> DecisionTree:
    n_features = x.shape[1]
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.bincount(y[idx], minlength=2))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        c = counts[node]
        if c.min() == 0 or len(idx) < 2 or (max_depth is not None and depth >= max_depth):
            continue
        # Visit features in random order until enough non-constant ones are found.
        chosen = []
        for f in gen.permutation(n_features):
            col = x[idx, f]
            if col.max() > col.min():
                chosen.append(int(f))
                if len(chosen) == features_per_split:
                    break
        best = None
        for f in sorted(chosen):
            found = _best_split_on_feature(x[idx, f], y[idx])
            if found is not None and (best is None or found[0] < best[0]):
                best = (found[0], found[1], f)
        if best is None:
            continue
        _, thr, f = best
        go_left = x[idx, f] <= thr
        l_idx, r_idx = idx[go_left], idx[~go_left]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(l_idx)
        right[node] = new_node(r_idx)
        stack.append((right[node], r_idx, depth + 1))
        stack.append((left[node], l_idx, depth + 1))

    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(counts, dtype=np.int64).reshape(-1, 2),
    )


@dataclass(eq=False)
class ForestModel:
    """Majority vote of trees; probability is the fraction of trees voting 1.

    With the default 0.5 threshold and the strict ``>`` rule, a tied vote
    predicts class 0.
    """

    trees: list[DecisionTree] = field(repr=False)
    max_depth: int | None
    features_per_split: int
    threshold: float = 0.5
    scaler: None = None

    @property
    def trees_count(self) -> int:
        return len(self.trees)

    def votes(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        return np.stack([t.predict(x) for t in self.trees], axis=0)

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return self.votes(features).mean(axis=0)


def train_forest(train, cfg: TrainConfig) -> ForestModel:
    x, y = np.asarray(train.features, dtype=np.float64), np.asarray(train.theta, dtype=np.int64)
    if len(y) == 0:
        raise TrainingError("empty training set")
    if not 1 <= cfg.features_per_split <= x.shape[1]:
        raise ValueError(f"features_per_split must be in 1..{x.shape[1]}")
    trees = []
    for k in range(cfg.trees_count):
        gen = rngmod.stream(cfg.rng_seed, k, _FOREST_SUB)
        rows = gen.integers(0, len(y), len(y)) if cfg.bootstrap else np.arange(len(y))
        trees.append(build_tree(x[rows], y[rows], cfg.max_depth, cfg.features_per_split, gen))
    return ForestModel(trees, cfg.max_depth, cfg.features_per_split, cfg.baseline_threshold)
