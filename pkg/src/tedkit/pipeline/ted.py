"""Trained pipeline objects: a composite-class TED model and a plain baseline model.

Both wrap a fitted classifier. The TED model also owns the codec fitted on its
training data and decodes each predicted composite back into a label and an
explanation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, ClassVar

import numpy as np
import structlog
from pydantic import BaseModel

from tedkit.codec import (
    CodecTable,
    canonical_order,
    codec_from_json,
    codec_to_json,
    decode_many,
    derive_many,
    encode_many,
    fit_codec,
)
from tedkit.datasets.base import Dataset
from tedkit.errors import ExperimentError
from tedkit.learners.base import Classifier, Learner
from tedkit.learners.serialize import model_from_json, model_to_json
from tedkit.models import SplitSpec

logger = structlog.get_logger(__name__)

MODEL_FORMAT = "tedkit.model"
MODEL_VERSION = 1


@dataclass(frozen=True, eq=False)
class Predictions:
    """Predicted label ids, plus explanation and composite ids for TED models.

    ``scores`` is the classifier's probability for the winning class of each row.
    """

    labels: np.ndarray
    scores: np.ndarray
    explanations: np.ndarray | None = None
    composites: np.ndarray | None = None


def _winning_scores(classifier: Classifier, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    proba = classifier.predict_proba(X)
    column = np.argmax(proba, axis=1)
    return classifier.classes[column], proba[np.arange(proba.shape[0]), column]


@dataclass(frozen=True, eq=False)
class BaselineModel:
    """Classifier trained on (X, Y)."""

    classifier: Classifier
    label_names: tuple[str, ...]

    mode: ClassVar[str] = "baseline"

    def predict(self, X: np.ndarray) -> Predictions:
        labels, scores = _winning_scores(self.classifier, X)
        return Predictions(labels=labels, scores=scores)


@dataclass(frozen=True, eq=False)
class TedModel:
    """Classifier trained on composite (Y, E) classes, with the codec that defines them.

    The classifier's class ``k`` is composite ``canonical_order(codec)[k]``, so
    training does not depend on the order pairs were first seen in.
    With ``derive_y_from_e`` the reported label is recomputed from the predicted
    explanation through the codec's explanation-to-label map.
    """

    codec: CodecTable
    classifier: Classifier
    derive_y_from_e: bool = False

    mode: ClassVar[str] = "ted"

    def __post_init__(self) -> None:
        if self.derive_y_from_e and self.codec.e_to_y is None:
            raise ExperimentError(
                "derive_y_from_e requested but explanations do not determine labels"
            )

    @property
    def label_names(self) -> tuple[str, ...]:
        return self.codec.labels

    def predict(self, X: np.ndarray) -> Predictions:
        ranks, scores = _winning_scores(self.classifier, X)
        composites = canonical_order(self.codec)[ranks]
        labels, explanations = decode_many(self.codec, composites)
        if self.derive_y_from_e:
            labels = derive_many(self.codec, explanations)
        return Predictions(
            labels=labels, scores=scores, explanations=explanations, composites=composites
        )


PipelineModel = BaselineModel | TedModel


def fit_baseline(train: Dataset, learner: Learner, seed: int) -> BaselineModel:
    """Fit *learner* on (X, Y).

    Raises:
        ExperimentError: If the training data carries explanations.
    """
    if train.has_explanations:
        raise ExperimentError(
            "baseline mode needs a dataset without explanations; drop the explanation column"
        )
    classifier = learner.fit(train.features, train.labels, seed)
    return BaselineModel(classifier=classifier, label_names=train.label_names)


def fit_ted(
    train: Dataset, learner: Learner, seed: int, derive_y_from_e: bool = False
) -> TedModel:
    """Fit a codec on *train*, then fit *learner* on (X, composite class).

    Raises:
        ExperimentError: If the training data has no explanations, or
            *derive_y_from_e* is requested for a codec without an
            explanation-to-label map.
    """
    if not train.has_explanations:
        raise ExperimentError("TED mode needs an explanation on every instance")
    codec = fit_codec(train, labels=train.label_names, explanations=train.explanation_names)
    if derive_y_from_e and codec.e_to_y is None:
        raise ExperimentError("derive_y_from_e requested but explanations do not determine labels")
    order = canonical_order(codec)
    ranks = np.empty_like(order)
    ranks[order] = np.arange(order.shape[0])
    composites = encode_many(codec, train.labels, train.explanations)
    classifier = learner.fit(train.features, ranks[composites], seed)
    return TedModel(codec=codec, classifier=classifier, derive_y_from_e=derive_y_from_e)


# ---------------------------------------------------------------------------
# Model file
# ---------------------------------------------------------------------------


class DatasetInfo(BaseModel):
    """What a model file records about its training data."""

    kind: str
    feature_names: tuple[str, ...]
    label_names: tuple[str, ...]
    explanation_names: tuple[str, ...] = ()
    digest: str
    n: int
    split: SplitSpec | None = None

    @classmethod
    def of(cls, dataset: Dataset, split: SplitSpec | None = None) -> DatasetInfo:
        return cls(
            kind=dataset.kind,
            feature_names=dataset.feature_names,
            label_names=dataset.label_names,
            explanation_names=dataset.explanation_names,
            digest=dataset.digest(),
            n=len(dataset),
            split=split,
        )


def model_document(model: PipelineModel, learner: str, info: DatasetInfo) -> dict[str, Any]:
    """JSON document for a trained pipeline model; free of timings, so reproducible."""
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "mode": model.mode,
        "learner": learner,
        "dataset": info.model_dump(mode="json"),
        "codec": codec_to_json(model.codec) if isinstance(model, TedModel) else None,
        "derive_y_from_e": model.derive_y_from_e if isinstance(model, TedModel) else False,
        "model": model_to_json(model.classifier),
    }


def load_model_document(doc: dict[str, Any]) -> tuple[PipelineModel, str, DatasetInfo]:
    """Inverse of :func:`model_document`.

    Returns:
        ``(model, learner name, dataset info)``.

    Raises:
        ExperimentError: If the document is not a tedkit model file.
    """
    if doc.get("format") != MODEL_FORMAT:
        raise ExperimentError(f"not a tedkit model file (format {doc.get('format')!r})")
    if doc.get("version") != MODEL_VERSION:
        raise ExperimentError(f"unsupported model file version {doc.get('version')!r}")
    try:
        info = DatasetInfo.model_validate(doc["dataset"])
        classifier = model_from_json(doc["model"])
        learner = str(doc["learner"])
        if doc["mode"] == "ted":
            model: PipelineModel = TedModel(
                codec=codec_from_json(doc["codec"]),
                classifier=classifier,
                derive_y_from_e=bool(doc.get("derive_y_from_e", False)),
            )
        elif doc["mode"] == "baseline":
            model = BaselineModel(classifier=classifier, label_names=info.label_names)
        else:
            raise ExperimentError(f"unknown model mode {doc['mode']!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise ExperimentError(f"malformed model file: {exc}") from exc
    logger.debug("model.loaded", mode=model.mode, learner=learner, dataset=info.kind)
    return model, learner, info
