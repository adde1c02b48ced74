"""Baseline and TED experiment runs, single-seed and repeated."""

from __future__ import annotations

import statistics
import time
from collections.abc import Sequence

import numpy as np
import structlog
from joblib import Parallel, delayed

from tedkit.codec import encode_many
from tedkit.datasets.base import Dataset
from tedkit.errors import ExperimentError
from tedkit.learners.base import Learner
from tedkit.models import (
    METRICS,
    AggregateReport,
    ExperimentReport,
    MetricSummary,
    Mode,
    SplitSpec,
)
from tedkit.pipeline.split import split
from tedkit.pipeline.ted import PipelineModel, Predictions, TedModel, fit_baseline, fit_ted

logger = structlog.get_logger(__name__)


def accuracy(predicted: np.ndarray, actual: np.ndarray) -> float:
    return float(np.mean(np.asarray(predicted) == np.asarray(actual)))


def score_ted(model: TedModel, test: Dataset, predictions: Predictions) -> dict[str, object]:
    """Y, E and joint accuracies plus the per-explanation E breakdown.

    Every test instance is scored, including those whose true (Y, E) pair was
    never seen in training; they count as joint misses.
    """
    if test.explanations is None or predictions.explanations is None:
        raise ExperimentError("TED scoring needs true and predicted explanations")
    y_hit = predictions.labels == test.labels
    e_hit = predictions.explanations == test.explanations
    by_explanation = {
        test.explanation_names[e]: accuracy(predictions.explanations[test.explanations == e], e)
        for e in np.unique(test.explanations).tolist()
    }
    unseen = encode_many(model.codec, test.labels, test.explanations, strict=False)
    return {
        "y_accuracy": float(np.mean(y_hit)),
        "e_accuracy": float(np.mean(e_hit)),
        "ye_accuracy": float(np.mean(y_hit & e_hit)),
        "e_accuracy_by_explanation": by_explanation,
        "unseen_test_pairs": int(np.count_nonzero(unseen < 0)),
    }


def run_baseline(dataset: Dataset, learner: Learner, spec: SplitSpec) -> ExperimentReport:
    """Train on (X, Y) of the train split and score Y on the test split.

    Raises:
        ExperimentError: If *dataset* carries explanations, or is too small to split.
    """
    if dataset.has_explanations:
        raise ExperimentError("baseline run needs a dataset without explanations (mode mixing)")
    log = logger.bind(dataset=dataset.kind, learner=learner.name, seed=spec.seed)
    t_start = time.perf_counter()
    train, test = split(dataset, spec)
    model = fit_baseline(train, learner, spec.seed)
    predictions = model.predict(test.features)
    report = ExperimentReport(
        mode="baseline",
        dataset=dataset.kind,
        learner=learner.name,
        seed=spec.seed,
        n_train=len(train),
        n_test=len(test),
        y_accuracy=accuracy(predictions.labels, test.labels),
        runtime_seconds=round(time.perf_counter() - t_start, 3),
    )
    log.info("experiment.baseline.complete", y_accuracy=report.y_accuracy)
    return report


def run_ted(
    dataset: Dataset,
    learner: Learner,
    spec: SplitSpec,
    derive_y_from_e: bool = False,
) -> ExperimentReport:
    """Fit the codec and learner on the train split, decode and score the test split.

    Args:
        dataset:         TED dataset; every instance carries an explanation.
        learner:         Learner fitted on composite ids.
        spec:            Split fraction and seed; the seed also seeds the learner.
        derive_y_from_e: Score the label implied by the predicted explanation
                         instead of the decoded label.

    Raises:
        ExperimentError: If explanations are missing, or *derive_y_from_e* is
            requested while explanations do not determine labels.
    """
    if not dataset.has_explanations:
        raise ExperimentError("TED run needs an explanation on every instance")
    log = logger.bind(dataset=dataset.kind, learner=learner.name, seed=spec.seed)
    t_start = time.perf_counter()
    train, test = split(dataset, spec)
    model = fit_ted(train, learner, spec.seed, derive_y_from_e)
    predictions = model.predict(test.features)
    scores = score_ted(model, test, predictions)
    report = ExperimentReport(
        mode="ted",
        dataset=dataset.kind,
        learner=learner.name,
        seed=spec.seed,
        n_train=len(train),
        n_test=len(test),
        derived_y=derive_y_from_e,
        n_composites=model.codec.n_composites,
        runtime_seconds=round(time.perf_counter() - t_start, 3),
        **scores,
    )
    log.info(
        "experiment.ted.complete",
        y_accuracy=report.y_accuracy,
        e_accuracy=report.e_accuracy,
        ye_accuracy=report.ye_accuracy,
        composites=report.n_composites,
        unseen_test_pairs=report.unseen_test_pairs,
    )
    return report


def run_experiment(
    dataset: Dataset,
    learner: Learner,
    mode: Mode,
    spec: SplitSpec,
    derive_y_from_e: bool = False,
) -> ExperimentReport:
    """Dispatch to :func:`run_baseline` or :func:`run_ted`."""
    if mode == "baseline":
        return run_baseline(dataset, learner, spec)
    if mode == "ted":
        return run_ted(dataset, learner, spec, derive_y_from_e)
    raise ExperimentError(f"unknown mode {mode!r}")


def summarize(runs: Sequence[ExperimentReport]) -> dict[str, MetricSummary]:
    """Mean and sample standard deviation of each metric present in every run."""
    summary: dict[str, MetricSummary] = {}
    for metric in METRICS:
        values = [getattr(run, metric) for run in runs]
        if any(v is None for v in values):
            continue
        summary[metric] = MetricSummary(
            mean=statistics.mean(values),
            std=statistics.stdev(values) if len(values) > 1 else 0.0,
            min=min(values),
            max=max(values),
        )
    return summary


def run_repeated(
    dataset: Dataset,
    learner: Learner,
    mode: Mode,
    seeds: Sequence[int],
    train_fraction: float = 0.9,
    derive_y_from_e: bool = False,
    n_jobs: int = 1,
) -> AggregateReport:
    """One run per seed, each with its own split and learner seed.

    Runs may execute in parallel; reports are kept in seed-list order.

    Raises:
        ExperimentError: If fewer than two seeds are given.
    """
    if len(seeds) < 2:
        raise ExperimentError(f"repeated runs need at least 2 seeds, got {len(seeds)}")
    logger.info("experiment.repeated.start", mode=mode, seeds=list(seeds), n_jobs=n_jobs)
    runs = Parallel(n_jobs=n_jobs)(
        delayed(run_experiment)(dataset, learner, mode, spec, derive_y_from_e)
        for spec in (SplitSpec(train_fraction=train_fraction, seed=seed) for seed in seeds)
    )
    report = AggregateReport(
        mode=mode,
        dataset=dataset.kind,
        learner=learner.name,
        runs=list(runs),
        summary=summarize(runs),
    )
    logger.info(
        "experiment.repeated.complete",
        mode=mode,
        **{metric: round(s.mean, 6) for metric, s in report.summary.items()},
    )
    return report


def evaluate(
    model: PipelineModel,
    dataset: Dataset,
    learner: str,
    seed: int,
    n_train: int,
) -> ExperimentReport:
    """Score a trained model on *dataset*.

    A TED model is scored on E and YE as well when *dataset* carries
    explanations; a baseline model ignores them.

    Raises:
        ExperimentError: If *dataset* is empty or its label vocabulary differs
            from the model's.
        LearnerError: If the feature width differs from the training width.
    """
    if len(dataset) == 0:
        raise ExperimentError("cannot evaluate on an empty dataset")
    if tuple(dataset.label_names) != tuple(model.label_names):
        raise ExperimentError(
            f"label vocabulary {dataset.label_names} differs from the model's {model.label_names}"
        )
    t_start = time.perf_counter()
    predictions = model.predict(dataset.features)
    fields: dict[str, object] = {"y_accuracy": accuracy(predictions.labels, dataset.labels)}
    if isinstance(model, TedModel):
        fields["derived_y"] = model.derive_y_from_e
        fields["n_composites"] = model.codec.n_composites
        if dataset.has_explanations:
            fields.update(score_ted(model, dataset, predictions))
    report = ExperimentReport(
        mode=model.mode,
        dataset=dataset.kind,
        learner=learner,
        seed=seed,
        n_train=n_train,
        n_test=len(dataset),
        runtime_seconds=round(time.perf_counter() - t_start, 3),
        **fields,
    )
    logger.info("experiment.evaluated", mode=model.mode, rows=len(dataset), y=report.y_accuracy)
    return report
