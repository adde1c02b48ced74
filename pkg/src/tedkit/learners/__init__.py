"""Classifiers behind a common fit / predict contract."""

from __future__ import annotations

from tedkit.errors import LearnerError
from tedkit.learners.base import Classifier, Learner
from tedkit.learners.forest import ForestLearner, ForestModel, forest_fit, forest_predict
from tedkit.learners.mlp import MlpLearner, MlpModel, mlp_fit, mlp_gradient_check
from tedkit.models import ForestConfig, MlpConfig

LEARNER_NAMES: tuple[str, ...] = ("mlp", "forest")

__all__ = [
    "LEARNER_NAMES",
    "Classifier",
    "ForestLearner",
    "ForestModel",
    "Learner",
    "MlpLearner",
    "MlpModel",
    "forest_fit",
    "forest_predict",
    "make_learner",
    "mlp_fit",
    "mlp_gradient_check",
]


def make_learner(
    name: str,
    mlp: MlpConfig | None = None,
    forest: ForestConfig | None = None,
) -> Learner:
    """Build the learner called *name* with its configuration.

    Raises:
        LearnerError: If *name* is not one of :data:`LEARNER_NAMES`.
    """
    if name == "mlp":
        return MlpLearner(mlp)
    if name == "forest":
        return ForestLearner(forest)
    raise LearnerError(f"unknown learner {name!r}; choose from {', '.join(LEARNER_NAMES)}")
