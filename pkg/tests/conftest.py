"""Shared pytest fixtures and configuration."""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from tedkit.datasets import loan, tictactoe
from tedkit.datasets.base import Dataset
from tedkit.learners.forest import ForestLearner
from tedkit.learners.mlp import MlpLearner
from tedkit.models import (
    AggregateReport,
    ExperimentReport,
    ExplanationId,
    ForestConfig,
    LabeledInstance,
    LabelId,
    MlpConfig,
    Table1Report,
    Tolerances,
)
from tedkit.pipeline.experiment import summarize
from tedkit.pipeline.table1 import tolerance_checks

# ---------------------------------------------------------------------------
# Generated datasets (expensive, built once per session)
# ---------------------------------------------------------------------------


@pytest.fixture(scope="session")
def tictactoe_ted() -> Dataset:
    """All 4,520 positions with move and reason."""
    return tictactoe.build_dataset(with_explanations=True)


@pytest.fixture(scope="session")
def tictactoe_boards() -> list[tictactoe.Board]:
    return tictactoe.enumerate_legal_nonterminal()


@pytest.fixture(scope="session")
def loan_ted() -> Dataset:
    """2,000 rule-labeled applications."""
    return loan.generate_synthetic(2000, seed=7)


# ---------------------------------------------------------------------------
# Small hand-built datasets
# ---------------------------------------------------------------------------


def _toy(explanations: bool, constant: bool = False) -> Dataset:
    """40 rows: label 1 iff x0 >= 20 (a wide gap separates the labels), E from x1."""
    rows = np.arange(40)
    labels = (rows // 10) % 2
    x0 = rows % 10 + 20 * labels
    x1 = rows // 20
    features = np.column_stack([x0, x1]).astype(np.float64)
    if constant:
        return Dataset(
            features=features,
            labels=labels,
            label_names=("no", "yes"),
            feature_names=("x0", "x1"),
            explanations=np.zeros(40, dtype=np.int64) if explanations else None,
            explanation_names=("only",),
        )
    return Dataset(
        features=features,
        labels=labels,
        label_names=("no", "yes"),
        feature_names=("x0", "x1"),
        explanations=2 * labels + x1 if explanations else None,
        explanation_names=("low_a", "low_b", "high_a", "high_b"),
    )


@pytest.fixture
def toy_ted() -> Dataset:
    """Separable toy data; each label has two explanations, so E determines Y."""
    return _toy(explanations=True)


@pytest.fixture
def toy_baseline() -> Dataset:
    return _toy(explanations=False)


@pytest.fixture
def toy_constant_e() -> Dataset:
    """Separable toy data in which every instance has the same explanation."""
    return _toy(explanations=True, constant=True)


@pytest.fixture
def letter_instances() -> list[LabeledInstance]:
    """Pairs (A,E1) (A,E2) (B,E3) (B,E4) (C,E5) in that order, then repeats."""
    labels = ("A", "B", "C")
    explanations = ("E1", "E2", "E3", "E4", "E5")
    order = [(0, 0), (0, 1), (1, 2), (1, 3), (2, 4), (0, 0), (1, 2)]
    return [
        LabeledInstance(
            features=(float(i), 0.0),
            label=LabelId(id=y, name=labels[y]),
            explanation=ExplanationId(id=e, name=explanations[e]),
        )
        for i, (y, e) in enumerate(order)
    ]


# ---------------------------------------------------------------------------
# Learners
# ---------------------------------------------------------------------------


@pytest.fixture
def exact_forest() -> ForestLearner:
    """Unbagged, all-feature trees grown to purity."""
    return ForestLearner(
        ForestConfig(n_trees=5, min_samples_leaf=1, max_features="all", bootstrap=False)
    )


@pytest.fixture
def small_mlp() -> MlpLearner:
    return MlpLearner(MlpConfig(hidden_units=16, epochs=50, batch_size=8, learning_rate=0.01))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _run(
    mode: str, dataset: str, seed: int, y: float, e: float | None = None
) -> ExperimentReport:
    return ExperimentReport(
        mode=mode,
        dataset=dataset,
        learner="mlp" if dataset == "tictactoe" else "forest",
        seed=seed,
        n_train=90,
        n_test=10,
        y_accuracy=y,
        e_accuracy=e,
        ye_accuracy=None if e is None else min(y, e),
        runtime_seconds=1.25,
    )


def _aggregate(mode: str, runs: list[ExperimentReport]) -> AggregateReport:
    return AggregateReport(
        mode=mode, dataset="loan", learner="forest", runs=runs, summary=summarize(runs)
    )


@pytest.fixture
def make_table1() -> Callable[[bool], Table1Report]:
    """Factory for a small accuracy table whose checks all pass or one fails."""

    def build(passed: bool) -> Table1Report:
        ttt_base = _run("baseline", "tictactoe", 7, 0.965)
        ttt_ted = _run("ted", "tictactoe", 7, 0.974, 0.963)
        loan_base = _aggregate("baseline", [_run("baseline", "loan", s, 0.99) for s in (7, 8)])
        loan_ted = _aggregate(
            "ted", [_run("ted", "loan", s, 0.995 if passed else 0.98, 0.99) for s in (7, 8)]
        )
        tolerances = Tolerances(loan_min_seeds_improved=2)
        return Table1Report(
            tictactoe_baseline=ttt_base,
            tictactoe_ted=ttt_ted,
            loan_baseline=loan_base,
            loan_ted=loan_ted,
            checks=tolerance_checks(ttt_base, ttt_ted, loan_base, loan_ted, tolerances),
        )

    return build
