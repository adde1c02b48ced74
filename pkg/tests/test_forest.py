"""Tests for the random forest."""

from __future__ import annotations

import numpy as np
import pytest

from tedkit.datasets.base import Dataset
from tedkit.errors import LearnerError
from tedkit.learners import LEARNER_NAMES, make_learner
from tedkit.learners.forest import (
    LEAF,
    ForestLearner,
    ForestModel,
    Tree,
    _gini_scan,
    forest_fit,
    forest_predict,
)
from tedkit.learners.mlp import MlpLearner
from tedkit.models import ForestConfig


def _leaf(counts: list[float]) -> Tree:
    return Tree(
        feature=np.array([LEAF]),
        threshold=np.array([0.0]),
        left=np.array([LEAF]),
        right=np.array([LEAF]),
        counts=np.array([counts], dtype=np.float64),
    )


def _stump(threshold: float) -> Tree:
    """Root splits on feature 0; left leaf is all class 0, right all class 1."""
    return Tree(
        feature=np.array([0, LEAF, LEAF]),
        threshold=np.array([threshold, 0.0, 0.0]),
        left=np.array([1, LEAF, LEAF]),
        right=np.array([2, LEAF, LEAF]),
        counts=np.array([[4.0, 4.0], [4.0, 0.0], [0.0, 4.0]]),
    )


def _separable(n: int = 300, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 4))
    return X, (X[:, 0] > 0.0).astype(np.int64)


# ---------------------------------------------------------------------------
# Split search
# ---------------------------------------------------------------------------


class TestGiniScan:
    def test_perfect_split(self) -> None:
        found = _gini_scan(np.array([3.0, 1.0, 4.0, 2.0]), np.array([1, 0, 1, 0]), 2, 1)
        assert found == (0.0, 2.5)

    def test_constant_feature(self) -> None:
        assert _gini_scan(np.ones(6), np.array([0, 1, 0, 1, 0, 1]), 2, 1) is None

    def test_min_leaf_blocks_split(self) -> None:
        """Four rows cannot make two leaves of three."""
        assert _gini_scan(np.arange(4.0), np.array([0, 0, 1, 1]), 2, 3) is None

    def test_threshold_separates_adjacent_floats(self) -> None:
        """The threshold sends the lower value left and the upper one right."""
        low = 1.0
        high = float(np.nextafter(low, 2.0))
        found = _gini_scan(np.array([low, high]), np.array([0, 1]), 2, 1)
        assert found is not None
        _, threshold = found
        assert low <= threshold < high


class TestTree:
    def test_boundary_goes_left(self) -> None:
        tree = _stump(1.5)
        assert tree.apply(np.array([[1.5], [1.6], [-3.0]])).tolist() == [1, 2, 1]

    def test_leaf_sizes(self) -> None:
        assert _stump(0.0).leaf_sizes().tolist() == [4.0, 4.0]


# ---------------------------------------------------------------------------
# Forest
# ---------------------------------------------------------------------------


class TestForestPredict:
    """Tests for averaging and argmax."""

    def test_single_tree_forest_matches_leaf_majority(self) -> None:
        model = ForestModel(trees=[_stump(0.0)], classes=np.array([0, 1]), n_features=1)
        assert forest_predict(model, np.array([[-1.0], [1.0]])).tolist() == [0, 1]

    def test_agreeing_trees(self) -> None:
        model = ForestModel(
            trees=[_leaf([1.0, 3.0]), _leaf([0.0, 5.0])],
            classes=np.array([0, 1]),
            n_features=2,
        )
        np.testing.assert_allclose(model.predict_proba(np.zeros((1, 2))), [[0.125, 0.875]])
        assert model.predict(np.zeros((1, 2))).tolist() == [1]

    def test_tie_goes_to_lowest_id(self) -> None:
        model = ForestModel(
            trees=[_leaf([3.0, 1.0]), _leaf([1.0, 3.0])],
            classes=np.array([4, 9]),
            n_features=1,
        )
        assert model.predict(np.zeros((3, 1))).tolist() == [4, 4, 4]

    def test_width_mismatch(self) -> None:
        model = ForestModel(trees=[_leaf([1.0, 0.0])], classes=np.array([0, 1]), n_features=3)
        with pytest.raises(LearnerError, match="width mismatch"):
            model.predict(np.zeros((1, 2)))


class TestForestFit:
    """Tests for forest_fit and ForestLearner."""

    def test_separable_training_accuracy(self) -> None:
        X, y = _separable()
        model = forest_fit(X, y, ForestConfig(n_trees=25, min_samples_leaf=1, seed=1))
        assert np.mean(model.predict(X) == y) >= 0.99

    def test_unrestricted_tree_memorises_distinct_rows(
        self, exact_forest: ForestLearner, loan_ted: Dataset
    ) -> None:
        """Without bagging or a leaf minimum every distinct training row is fit."""
        X, y = loan_ted.features[:300], loan_ted.explanations[:300]
        model = exact_forest.fit(X, y, seed=0)
        assert model.predict(X).tolist() == y.tolist()

    def test_leaf_minimum_respected(self, loan_ted: Dataset) -> None:
        """Every leaf holds at least min_samples_leaf bootstrap rows."""
        model = forest_fit(
            loan_ted.features, loan_ted.labels, ForestConfig(n_trees=10, min_samples_leaf=5)
        )
        assert model.min_leaf_size() >= 5

    def test_class_ids_preserved(self) -> None:
        X, y = _separable(seed=2)
        sparse = np.array([2, 5, 7])[y + (X[:, 1] > 1.0)]
        model = forest_fit(X, sparse, ForestConfig(n_trees=5))
        assert model.classes.tolist() == sorted(set(sparse.tolist()))
        assert set(model.predict(X).tolist()) <= set(sparse.tolist())

    def test_same_seed_same_forest(self) -> None:
        X, y = _separable()
        learner = ForestLearner(ForestConfig(n_trees=8))
        first, second = learner.fit(X, y, seed=3), learner.fit(X, y, seed=3)
        assert np.array_equal(first.predict_proba(X), second.predict_proba(X))

    def test_seed_changes_forest(self) -> None:
        X, y = _separable()
        learner = ForestLearner(ForestConfig(n_trees=8))
        first, second = learner.fit(X, y, seed=3), learner.fit(X, y, seed=4)
        assert not np.array_equal(first.predict_proba(X), second.predict_proba(X))

    def test_worker_count_does_not_matter(self) -> None:
        X, y = _separable(n=120)
        serial = forest_fit(X, y, ForestConfig(n_trees=6, n_jobs=1, seed=9))
        parallel = forest_fit(X, y, ForestConfig(n_trees=6, n_jobs=2, seed=9))
        assert np.array_equal(serial.predict_proba(X), parallel.predict_proba(X))

    def test_dimension_mismatch(self) -> None:
        X, y = _separable()
        with pytest.raises(LearnerError, match="dimension mismatch"):
            forest_fit(X, y[:10], ForestConfig(n_trees=1))


class TestMakeLearner:
    @pytest.mark.parametrize(("name", "cls"), [("mlp", MlpLearner), ("forest", ForestLearner)])
    def test_known(self, name: str, cls: type) -> None:
        learner = make_learner(name)
        assert isinstance(learner, cls)
        assert learner.name == name
        assert name in LEARNER_NAMES

    def test_unknown(self) -> None:
        with pytest.raises(LearnerError, match="unknown learner 'svm'"):
            make_learner("svm")
