"""Versioned JSON documents for fitted models.

Floats are written with ``repr`` precision by :mod:`json`, so a dumped and
reloaded model predicts bit-identically.
"""

from __future__ import annotations

from typing import Any

import numpy as np

from tedkit.errors import LearnerError
from tedkit.learners.base import Classifier
from tedkit.learners.forest import ForestModel, Tree
from tedkit.learners.mlp import PARAM_NAMES, MlpModel

FORMAT_VERSION = 1
MLP_FORMAT = "tedkit.mlp"
FOREST_FORMAT = "tedkit.forest"

_TREE_FIELDS = ("feature", "threshold", "left", "right")


def _mlp_to_json(model: MlpModel) -> dict[str, Any]:
    return {
        "format": MLP_FORMAT,
        "version": FORMAT_VERSION,
        "classes": model.classes.tolist(),
        "shapes": {name: list(model.params[name].shape) for name in PARAM_NAMES},
        "params": {name: model.params[name].tolist() for name in PARAM_NAMES},
        "loss_history": list(model.loss_history),
    }


def _mlp_from_json(doc: dict[str, Any]) -> MlpModel:
    params = {}
    for name in PARAM_NAMES:
        array = np.asarray(doc["params"][name], dtype=np.float64)
        if list(array.shape) != list(doc["shapes"][name]):
            expected = tuple(doc["shapes"][name])
            raise LearnerError(f"parameter {name} has shape {array.shape}, expected {expected}")
        params[name] = array
    return MlpModel(
        params=params,
        classes=np.asarray(doc["classes"], dtype=np.int64),
        loss_history=[float(v) for v in doc.get("loss_history", [])],
    )


def _tree_to_json(tree: Tree) -> dict[str, Any]:
    doc: dict[str, Any] = {name: getattr(tree, name).tolist() for name in _TREE_FIELDS}
    doc["counts"] = tree.counts.astype(np.int64).tolist()
    return doc


def _tree_from_json(doc: dict[str, Any]) -> Tree:
    return Tree(
        feature=np.asarray(doc["feature"], dtype=np.int64),
        threshold=np.asarray(doc["threshold"], dtype=np.float64),
        left=np.asarray(doc["left"], dtype=np.int64),
        right=np.asarray(doc["right"], dtype=np.int64),
        counts=np.asarray(doc["counts"], dtype=np.float64),
    )


def _forest_to_json(model: ForestModel) -> dict[str, Any]:
    return {
        "format": FOREST_FORMAT,
        "version": FORMAT_VERSION,
        "classes": model.classes.tolist(),
        "n_features": model.n_features,
        "min_samples_leaf": model.min_samples_leaf,
        "trees": [_tree_to_json(tree) for tree in model.trees],
    }


def _forest_from_json(doc: dict[str, Any]) -> ForestModel:
    return ForestModel(
        trees=[_tree_from_json(tree) for tree in doc["trees"]],
        classes=np.asarray(doc["classes"], dtype=np.int64),
        n_features=int(doc["n_features"]),
        min_samples_leaf=int(doc.get("min_samples_leaf", 1)),
    )


def model_to_json(model: Classifier) -> dict[str, Any]:
    """Serialise an MLP or forest model.

    Raises:
        LearnerError: For any other model type.
    """
    if isinstance(model, MlpModel):
        return _mlp_to_json(model)
    if isinstance(model, ForestModel):
        return _forest_to_json(model)
    raise LearnerError(f"cannot serialise model of type {type(model).__name__}")


def model_from_json(doc: dict[str, Any]) -> Classifier:
    """Rebuild a model written by :func:`model_to_json`.

    Raises:
        LearnerError: On an unknown format, an unsupported version or missing fields.
    """
    kind = doc.get("format")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise LearnerError(f"unsupported model version {version!r} (expected {FORMAT_VERSION})")
    try:
        if kind == MLP_FORMAT:
            return _mlp_from_json(doc)
        if kind == FOREST_FORMAT:
            return _forest_from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise LearnerError(f"malformed {kind} document: {exc}") from exc
    raise LearnerError(f"unknown model format {kind!r}")
