"""Tests for the split, the trained pipeline models and the experiment runs."""

from __future__ import annotations

import json

import numpy as np
import pytest

from tedkit.codec import decode_many
from tedkit.datasets import loan
from tedkit.datasets.base import Dataset
from tedkit.errors import ExperimentError
from tedkit.learners.forest import ForestLearner
from tedkit.learners.mlp import MlpLearner
from tedkit.models import ForestConfig, SplitSpec
from tedkit.pipeline import run_baseline, run_repeated, run_ted, split
from tedkit.pipeline.experiment import evaluate, run_experiment, score_ted, summarize
from tedkit.pipeline.split import split_indices
from tedkit.pipeline.ted import (
    DatasetInfo,
    Predictions,
    TedModel,
    fit_baseline,
    fit_ted,
    load_model_document,
    model_document,
)


def _overlapping(explanations: bool) -> Dataset:
    """120 noisy two-class rows whose first row has label 1; E, if present, is constant."""
    rng = np.random.default_rng(11)
    features = rng.normal(size=(120, 3))
    labels = (features[:, 0] + rng.normal(scale=0.8, size=120) > 0).astype(np.int64)
    labels[0] = 1
    return Dataset(
        features=features,
        labels=labels,
        label_names=("no", "yes"),
        feature_names=("a", "b", "c"),
        explanations=np.zeros(120, dtype=np.int64) if explanations else None,
        explanation_names=("only",),
    )


# ---------------------------------------------------------------------------
# Split
# ---------------------------------------------------------------------------


class TestSplit:
    """Tests for the seeded partition."""

    def test_tictactoe_sizes(self) -> None:
        """4,520 rows at 0.9 give 4,068 / 452."""
        train, test = split_indices(4520, SplitSpec(train_fraction=0.9, seed=0))
        assert (len(train), len(test)) == (4068, 452)

    def test_disjoint_and_complete(self) -> None:
        train, test = split_indices(100, SplitSpec(seed=5))
        assert not set(train.tolist()) & set(test.tolist())
        assert sorted(train.tolist() + test.tolist()) == list(range(100))

    def test_deterministic(self) -> None:
        first = split_indices(50, SplitSpec(seed=2))
        second = split_indices(50, SplitSpec(seed=2))
        assert all(np.array_equal(a, b) for a, b in zip(first, second, strict=True))

    def test_seed_changes_partition(self) -> None:
        first, _ = split_indices(50, SplitSpec(seed=2))
        second, _ = split_indices(50, SplitSpec(seed=3))
        assert not np.array_equal(first, second)

    def test_floor_is_exact(self) -> None:
        """0.29 * 100 is 28.999... in floating point; the train part still has 29 rows."""
        train, _ = split_indices(100, SplitSpec(train_fraction=0.29, seed=0))
        assert len(train) == 29

    def test_too_small(self) -> None:
        with pytest.raises(ExperimentError, match="too small to split"):
            split_indices(9, SplitSpec())

    def test_empty_part(self) -> None:
        with pytest.raises(ExperimentError, match="leaves an empty part"):
            split_indices(10, SplitSpec(train_fraction=0.05))

    def test_fraction_bounds(self) -> None:
        with pytest.raises(ValueError):
            SplitSpec(train_fraction=1.0)

    def test_split_keeps_explanations(self, toy_ted: Dataset) -> None:
        train, test = split(toy_ted, SplitSpec(seed=1))
        assert train.has_explanations and test.has_explanations
        assert len(train) + len(test) == len(toy_ted)


# ---------------------------------------------------------------------------
# Single runs
# ---------------------------------------------------------------------------


class TestRunBaseline:
    def test_separable(self, toy_baseline: Dataset, exact_forest: ForestLearner) -> None:
        report = run_baseline(toy_baseline, exact_forest, SplitSpec(seed=0))
        assert report.mode == "baseline"
        assert (report.n_train, report.n_test) == (36, 4)
        assert report.y_accuracy == 1.0
        assert report.e_accuracy is None and report.ye_accuracy is None

    def test_mode_mixing(self, toy_ted: Dataset, exact_forest: ForestLearner) -> None:
        with pytest.raises(ExperimentError, match="mode mixing"):
            run_baseline(toy_ted, exact_forest, SplitSpec())

    def test_constant_label(self, toy_baseline: Dataset, exact_forest: ForestLearner) -> None:
        """A forest fit on a single label predicts it everywhere."""
        data = Dataset(
            features=toy_baseline.features,
            labels=np.zeros(len(toy_baseline), dtype=np.int64),
            label_names=toy_baseline.label_names,
            feature_names=toy_baseline.feature_names,
        )
        report = run_baseline(data, exact_forest, SplitSpec(seed=3))
        assert report.y_accuracy == 1.0


class TestRunTed:
    """Tests for composite training, decoding and scoring."""

    def test_separable(self, toy_ted: Dataset, exact_forest: ForestLearner) -> None:
        report = run_ted(toy_ted, exact_forest, SplitSpec(seed=0))
        assert report.mode == "ted"
        assert report.n_composites == 4
        assert (report.y_accuracy, report.e_accuracy, report.ye_accuracy) == (1.0, 1.0, 1.0)
        assert report.unseen_test_pairs == 0

    def test_needs_explanations(self, toy_baseline: Dataset, exact_forest: ForestLearner) -> None:
        with pytest.raises(ExperimentError, match="explanation on every instance"):
            run_ted(toy_baseline, exact_forest, SplitSpec())

    def test_constant_explanation_matches_baseline(
        self,
        toy_constant_e: Dataset,
        toy_baseline: Dataset,
        exact_forest: ForestLearner,
    ) -> None:
        """A single explanation value reduces TED to the baseline problem."""
        ted = run_ted(toy_constant_e, exact_forest, SplitSpec(seed=4))
        baseline = run_baseline(toy_baseline, exact_forest, SplitSpec(seed=4))
        assert ted.n_composites == 2
        assert ted.y_accuracy == baseline.y_accuracy
        assert ted.e_accuracy == 1.0

    def test_constant_explanation_mlp_is_baseline_network(self, small_mlp: MlpLearner) -> None:
        """The first training label is 1, yet TED trains the very network the baseline does."""
        ted_data, base_data = _overlapping(True), _overlapping(False)
        ted = fit_ted(ted_data, small_mlp, seed=3)
        baseline = fit_baseline(base_data, small_mlp, seed=3)
        assert ted.codec.pairs[0] == (1, 0)
        X = ted_data.features
        np.testing.assert_array_equal(
            ted.classifier.predict_proba(X), baseline.classifier.predict_proba(X)
        )
        np.testing.assert_array_equal(ted.predict(X).labels, baseline.predict(X).labels)

    @pytest.mark.parametrize("seed", range(4))
    def test_constant_explanation_mlp_matches_baseline(
        self, seed: int, small_mlp: MlpLearner
    ) -> None:
        ted = run_ted(_overlapping(True), small_mlp, SplitSpec(seed=seed))
        baseline = run_baseline(_overlapping(False), small_mlp, SplitSpec(seed=seed))
        assert ted.y_accuracy == baseline.y_accuracy
        assert ted.e_accuracy == 1.0

    def test_derive_requires_functional_map(
        self, toy_constant_e: Dataset, exact_forest: ForestLearner
    ) -> None:
        with pytest.raises(ExperimentError, match="do not determine labels"):
            run_ted(toy_constant_e, exact_forest, SplitSpec(), derive_y_from_e=True)

    def test_derive_on_functional_map(self, toy_ted: Dataset, exact_forest: ForestLearner) -> None:
        report = run_ted(toy_ted, exact_forest, SplitSpec(seed=2), derive_y_from_e=True)
        assert report.derived_y
        assert report.y_accuracy == 1.0

    def test_codec_fit_on_train_only(self, toy_ted: Dataset, exact_forest: ForestLearner) -> None:
        """Pairs that only occur in the test rows get no composite and count as misses."""
        train, test = toy_ted.subset(np.arange(30)), toy_ted.subset(np.arange(30, 40))
        model = fit_ted(train, exact_forest, seed=0)
        assert model.codec.n_composites == 3
        scores = score_ted(model, test, model.predict(test.features))
        assert scores["unseen_test_pairs"] == 10
        assert scores["ye_accuracy"] == 0.0

    def test_decoded_labels_follow_composites(
        self, toy_ted: Dataset, exact_forest: ForestLearner
    ) -> None:
        model = fit_ted(toy_ted, exact_forest, seed=0)
        predictions = model.predict(toy_ted.features)
        labels, explanations = decode_many(model.codec, predictions.composites)
        assert np.array_equal(predictions.labels, labels)
        assert np.array_equal(predictions.explanations, explanations)

    def test_dispatch(self, toy_ted: Dataset, exact_forest: ForestLearner) -> None:
        assert run_experiment(toy_ted, exact_forest, "ted", SplitSpec()).mode == "ted"


class TestScoreTed:
    def test_recount(self, toy_ted: Dataset, exact_forest: ForestLearner) -> None:
        """Accuracies equal a direct count over hand-made predictions."""
        model = fit_ted(toy_ted, exact_forest, seed=0)
        test = toy_ted.subset(np.array([0, 5, 12, 18, 25, 33]))
        assert test.explanations is not None
        predicted_y = np.array([0, 1, 1, 1, 0, 0])
        predicted_e = np.array([0, 0, 2, 3, 1, 3])
        predictions = Predictions(labels=predicted_y, scores=np.ones(6), explanations=predicted_e)
        scores = score_ted(model, test, predictions)
        pairs = list(zip(predicted_y, predicted_e, test.labels, test.explanations, strict=True))
        y_hits = sum(py == ty for py, _, ty, _ in pairs)
        e_hits = sum(pe == te for _, pe, _, te in pairs)
        both = sum(py == ty and pe == te for py, pe, ty, te in pairs)
        assert scores["y_accuracy"] == pytest.approx(y_hits / 6)
        assert scores["e_accuracy"] == pytest.approx(e_hits / 6)
        assert scores["ye_accuracy"] == pytest.approx(both / 6)
        assert scores["ye_accuracy"] <= min(scores["y_accuracy"], scores["e_accuracy"])
        assert set(scores["e_accuracy_by_explanation"]) == set(toy_ted.explanation_names)


# ---------------------------------------------------------------------------
# Repeated runs
# ---------------------------------------------------------------------------


class TestRunRepeated:
    def test_needs_two_seeds(self, toy_ted: Dataset, exact_forest: ForestLearner) -> None:
        with pytest.raises(ExperimentError, match="at least 2 seeds"):
            run_repeated(toy_ted, exact_forest, "ted", [0])

    def test_identical_runs_have_zero_std(
        self, toy_ted: Dataset, exact_forest: ForestLearner
    ) -> None:
        report = run_repeated(toy_ted, exact_forest, "ted", [0, 1, 2])
        assert report.seeds == [0, 1, 2]
        assert report.summary["y_accuracy"].mean == 1.0
        assert report.summary["y_accuracy"].std == 0.0

    def test_summary_bounds(self, loan_ted: Dataset) -> None:
        data = loan_ted.subset(np.arange(300)).without_explanations()
        learner = ForestLearner(ForestConfig(n_trees=5))
        report = run_repeated(data, learner, "baseline", [3, 1, 2], n_jobs=2)
        assert report.seeds == [3, 1, 2]
        summary = report.summary["y_accuracy"]
        assert summary.min <= summary.mean <= summary.max
        assert set(report.summary) == {"y_accuracy"}

    def test_summarize_matches_statistics(self, toy_ted: Dataset) -> None:
        runs = [
            run_ted(toy_ted, ForestLearner(ForestConfig(n_trees=1)), SplitSpec(seed=s))
            for s in (0, 1)
        ]
        summary = summarize(runs)
        values = [run.e_accuracy for run in runs]
        assert summary["e_accuracy"].mean == pytest.approx(sum(values) / 2)


# ---------------------------------------------------------------------------
# Evaluation and model files
# ---------------------------------------------------------------------------


class TestEvaluate:
    def test_baseline_model_on_ted_data(
        self, toy_ted: Dataset, toy_baseline: Dataset, exact_forest: ForestLearner
    ) -> None:
        """A baseline model scores labels only, even when explanations are present."""
        model = fit_baseline(toy_baseline, exact_forest, seed=0)
        report = evaluate(model, toy_ted, "forest", seed=0, n_train=40)
        assert report.y_accuracy == 1.0
        assert report.e_accuracy is None

    def test_vocabulary_mismatch(self, toy_ted: Dataset, exact_forest: ForestLearner) -> None:
        model = fit_ted(toy_ted, exact_forest, seed=0)
        other = loan.generate_synthetic(20, seed=0)
        with pytest.raises(ExperimentError, match="label vocabulary"):
            evaluate(model, other, "forest", seed=0, n_train=40)

    def test_empty(self, toy_ted: Dataset, exact_forest: ForestLearner) -> None:
        model = fit_ted(toy_ted, exact_forest, seed=0)
        with pytest.raises(ExperimentError, match="empty dataset"):
            evaluate(model, toy_ted.subset(np.arange(0)), "forest", seed=0, n_train=40)


class TestModelDocument:
    def test_reload(self, toy_ted: Dataset, exact_forest: ForestLearner) -> None:
        model = fit_ted(toy_ted, exact_forest, seed=0, derive_y_from_e=True)
        doc = model_document(model, "forest", DatasetInfo.of(toy_ted, SplitSpec(seed=0)))
        reloaded, learner, info = load_model_document(json.loads(json.dumps(doc)))
        assert isinstance(reloaded, TedModel)
        assert reloaded.derive_y_from_e
        assert learner == "forest"
        assert info.digest == toy_ted.digest()
        first, second = model.predict(toy_ted.features), reloaded.predict(toy_ted.features)
        assert np.array_equal(first.composites, second.composites)

    def test_not_a_model(self) -> None:
        with pytest.raises(ExperimentError, match="not a tedkit model file"):
            load_model_document({"format": "tedkit.forest"})
