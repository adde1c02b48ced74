"""Seeded train/test partition."""

from __future__ import annotations

import math

import numpy as np

from tedkit.datasets.base import Dataset
from tedkit.errors import ExperimentError
from tedkit.models import SplitSpec

MIN_INSTANCES = 10


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Row indices of the train and test parts of an *n*-row dataset.

    The first ``floor(train_fraction * n)`` entries of a seeded uniform
    permutation form the train part.

    Raises:
        ExperimentError: If ``n < 10`` or either part would be empty.
    """
    if n < MIN_INSTANCES:
        raise ExperimentError(f"dataset too small to split: {n} instances (need {MIN_INSTANCES})")
    # Guard against products such as 0.29 * 100 landing just below an integer.
    n_train = math.floor(spec.train_fraction * n + 1e-9)
    if not 0 < n_train < n:
        raise ExperimentError(f"train fraction {spec.train_fraction} leaves an empty part")
    order = np.random.default_rng(spec.seed).permutation(n)
    return order[:n_train], order[n_train:]


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Partition *dataset* into disjoint train and test datasets."""
    train_idx, test_idx = split_indices(len(dataset), spec)
    return dataset.subset(train_idx), dataset.subset(test_idx)
