"""Classifier contract shared by the MLP and the random forest."""

from __future__ import annotations

from typing import Protocol, runtime_checkable

import numpy as np

from tedkit.errors import LearnerError


@runtime_checkable
class Classifier(Protocol):
    """A fitted model.

    ``classes`` holds the sorted class ids seen at fit time; column ``k`` of
    :meth:`predict_proba` scores ``classes[k]``.
    """

    classes: np.ndarray
    n_features: int

    def predict_proba(self, X: np.ndarray) -> np.ndarray: ...

    def predict(self, X: np.ndarray) -> np.ndarray: ...


class Learner(Protocol):
    """Factory that fits a :class:`Classifier` for a given seed."""

    name: str

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int) -> Classifier: ...


def check_training_data(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Validate and convert training inputs.

    Returns:
        ``(float64 matrix, int64 class ids)``.

    Raises:
        LearnerError: On non-2-D features, length mismatch, empty data, or
            negative class ids.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2:
        raise LearnerError(f"features must be 2-D, got shape {X.shape}")
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise LearnerError(f"dimension mismatch: {X.shape[0]} rows, {y.shape} class ids")
    if X.shape[0] == 0:
        raise LearnerError("no training rows")
    if not np.issubdtype(y.dtype, np.integer) or y.min() < 0:
        raise LearnerError("class ids must be non-negative integers")
    return X, y.astype(np.int64)


def check_width(X: np.ndarray, n_features: int) -> np.ndarray:
    """Validate the width of a prediction matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != n_features:
        raise LearnerError(f"width mismatch: model expects {n_features} features, got {X.shape}")
    return X


def argmax_classes(proba: np.ndarray, classes: np.ndarray) -> np.ndarray:
    """Class id of each row's highest score; exact ties go to the lowest id."""
    return classes[np.argmax(proba, axis=1)]


def spawn_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    """Independent child streams of *seed*; child ``i`` depends only on ``(seed, i)``."""
    return np.random.SeedSequence(seed).spawn(n)


def learner_rng(seed: int) -> np.random.Generator:
    """Generator for a learner's own draws.

    It uses a spawned child of *seed*, so it never replays the stream that
    ``default_rng(seed)`` gives the train/test split.
    """
    return np.random.default_rng(spawn_seeds(seed, 1)[0])
