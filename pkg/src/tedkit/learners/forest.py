"""Random forest of CART classification trees.

Each tree is grown on a bootstrap resample with Gini splits at midpoints between
consecutive distinct feature values, drawing ``floor(sqrt(d))`` candidate
features per split. Trees are grown in parallel with joblib; tree ``i`` draws
from child stream ``i`` of the forest seed, so the result does not depend on
the number of workers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import structlog
from joblib import Parallel, delayed

from tedkit.learners.base import argmax_classes, check_training_data, check_width, spawn_seeds
from tedkit.models import ForestConfig

logger = structlog.get_logger(__name__)

LEAF = -1
_MIN_GAIN = 1e-12


@dataclass(eq=False)
class Tree:
    """Flat node arrays; node 0 is the root and ``feature[i] == -1`` marks a leaf.

    Samples with ``x[feature] <= threshold`` go to ``left``. ``counts[i]`` holds
    the training class counts (bootstrap multiplicity included) that reached
    node ``i``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature == LEAF

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        nodes = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(~self.is_leaf[nodes])
        while active.size:
            current = nodes[active]
            go_left = X[active, self.feature[current]] <= self.threshold[current]
            nodes[active] = np.where(go_left, self.left[current], self.right[current])
            active = active[~self.is_leaf[nodes[active]]]
        return nodes

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        leaf_counts = self.counts[self.apply(X)]
        return leaf_counts / leaf_counts.sum(axis=1, keepdims=True)

    def leaf_sizes(self) -> np.ndarray:
        return self.counts[self.is_leaf].sum(axis=1)


def _gini_scan(
    x: np.ndarray, y: np.ndarray, n_classes: int, min_leaf: int
) -> tuple[float, float] | None:
    """Best threshold on one feature: ``(weighted child impurity, threshold)``."""
    m = x.shape[0]
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    onehot = np.zeros((m, n_classes))
    onehot[np.arange(m), ys] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    right = left[-1] + onehot[-1] - left
    n_left = np.arange(1, m, dtype=np.float64)
    n_right = m - n_left
    gini_left = 1.0 - ((left / n_left[:, None]) ** 2).sum(axis=1)
    gini_right = 1.0 - ((right / n_right[:, None]) ** 2).sum(axis=1)
    impurity = (n_left * gini_left + n_right * gini_right) / m
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    candidates = np.flatnonzero(valid)
    i = candidates[np.argmin(impurity[candidates])]
    threshold = (xs[i] + xs[i + 1]) / 2.0
    if threshold >= xs[i + 1]:
        threshold = xs[i]
    return float(impurity[i]), float(threshold)


def _best_split(
    X: np.ndarray,
    y: np.ndarray,
    parent_impurity: float,
    n_classes: int,
    min_leaf: int,
    max_features: int,
    rng: np.random.Generator,
) -> tuple[int, float] | None:
    """Search ``max_features`` random features, then further ones until a split helps.

    An impure node with no improving split still takes the best valid split so
    that unrestricted trees can separate every distinct row.
    """
    best: tuple[float, int, float] | None = None
    for rank, feature in enumerate(rng.permutation(X.shape[1]).tolist()):
        if rank >= max_features and best is not None and parent_impurity - best[0] > _MIN_GAIN:
            break
        found = _gini_scan(X[:, feature], y, n_classes, min_leaf)
        if found is not None and (best is None or found[0] < best[0]):
            best = (found[0], feature, found[1])
    if best is None:
        return None
    return best[1], best[2]


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    config: ForestConfig,
    seed: np.random.SeedSequence,
) -> Tree:
    rng = np.random.default_rng(seed)
    n, d = X.shape
    sample = rng.integers(0, n, n) if config.bootstrap else np.arange(n)
    max_features = d if config.max_features == "all" else max(1, int(math.isqrt(d)))
    min_leaf = config.min_samples_leaf

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    counts: list[np.ndarray] = []

    def new_node(rows: np.ndarray) -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        counts.append(np.bincount(y[rows], minlength=n_classes).astype(np.float64))
        return len(feature) - 1

    stack = [(new_node(sample), sample)]
    while stack:
        node, rows = stack.pop()
        node_counts = counts[node]
        if rows.shape[0] < 2 * min_leaf or np.count_nonzero(node_counts) <= 1:
            continue
        impurity = 1.0 - float(((node_counts / rows.shape[0]) ** 2).sum())
        split = _best_split(X[rows], y[rows], impurity, n_classes, min_leaf, max_features, rng)
        if split is None:
            continue
        f, thr = split
        goes_left = X[rows, f] <= thr
        left_rows, right_rows = rows[goes_left], rows[~goes_left]
        left_node, right_node = new_node(left_rows), new_node(right_rows)
        feature[node], threshold[node] = f, thr
        left[node], right[node] = left_node, right_node
        stack.append((right_node, right_rows))
        stack.append((left_node, left_rows))

    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        counts=np.vstack(counts),
    )


@dataclass(eq=False)
class ForestModel:
    """Fitted ensemble. ``classes[k]`` is the class id of probability column ``k``."""

    trees: list[Tree]
    classes: np.ndarray
    n_features: int
    min_samples_leaf: int = 1

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = check_width(X, self.n_features)
        total = np.zeros((X.shape[0], len(self.classes)))
        for tree in self.trees:
            total += tree.predict_proba(X)
        return total / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return argmax_classes(self.predict_proba(X), self.classes)

    def min_leaf_size(self) -> float:
        return float(min(tree.leaf_sizes().min() for tree in self.trees))


def forest_fit(X: np.ndarray, y: np.ndarray, config: ForestConfig) -> ForestModel:
    """Grow ``config.n_trees`` trees on bootstrap resamples of ``(X, y)``.

    Raises:
        LearnerError: On dimension mismatch.
    """
    X, y = check_training_data(X, y)
    classes = np.unique(y)
    targets = np.searchsorted(classes, y)
    t_start = time.perf_counter()
    trees = Parallel(n_jobs=config.n_jobs)(
        delayed(_grow_tree)(X, targets, len(classes), config, seed)
        for seed in spawn_seeds(config.seed, config.n_trees)
    )
    model = ForestModel(
        trees=list(trees),
        classes=classes,
        n_features=X.shape[1],
        min_samples_leaf=config.min_samples_leaf,
    )
    logger.info(
        "forest.fitted",
        rows=X.shape[0],
        classes=len(classes),
        trees=config.n_trees,
        nodes=sum(tree.n_nodes for tree in model.trees),
        seconds=round(time.perf_counter() - t_start, 2),
    )
    return model


def forest_predict(model: ForestModel, X: np.ndarray) -> np.ndarray:
    """Average the trees' leaf class distributions and take the argmax.

    Raises:
        LearnerError: If the width of *X* differs from the training width.
    """
    return model.predict(X)


class ForestLearner:
    """:class:`~tedkit.learners.base.Learner` wrapper around :func:`forest_fit`."""

    name = "forest"

    def __init__(self, config: ForestConfig | None = None) -> None:
        self.config = config or ForestConfig()

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int) -> ForestModel:
        return forest_fit(X, y, self.config.model_copy(update={"seed": seed}))
