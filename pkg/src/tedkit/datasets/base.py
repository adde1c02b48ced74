"""Columnar dataset container that also reads as a sequence of labeled instances."""

from __future__ import annotations

import hashlib
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from typing import overload

import numpy as np

from tedkit.errors import DatasetError
from tedkit.models import ExplanationId, LabeledInstance, LabelId


@dataclass(frozen=True, eq=False)
class Dataset(Sequence[LabeledInstance]):
    """Feature matrix plus label ids and, for TED data, explanation ids.

    Either every instance carries an explanation (``explanations`` is an array)
    or none does (``explanations is None``).

    Attributes:
        features:          ``(n, d)`` float matrix.
        labels:            ``(n,)`` label ids into ``label_names``.
        label_names:       Label vocabulary, names by id.
        feature_names:     Column names, length ``d``.
        explanations:      ``(n,)`` explanation ids, or ``None``.
        explanation_names: Explanation vocabulary; kept even when the
                           explanations themselves are dropped.
        kind:              ``"tictactoe"``, ``"loan"`` or ``"generic"``.
        meta:              Free-form provenance (seed, generator settings).
    """

    features: np.ndarray
    labels: np.ndarray
    label_names: tuple[str, ...]
    feature_names: tuple[str, ...]
    explanations: np.ndarray | None = None
    explanation_names: tuple[str, ...] = ()
    kind: str = "generic"
    meta: dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise DatasetError(f"features must be 2-D, got shape {features.shape}")
        if labels.shape != (features.shape[0],):
            raise DatasetError(
                f"{labels.shape[0]} labels for {features.shape[0]} feature rows"
            )
        if len(self.feature_names) != features.shape[1]:
            raise DatasetError(
                f"{len(self.feature_names)} feature names for width {features.shape[1]}"
            )
        _check_ids(labels, len(self.label_names), "label")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "label_names", tuple(self.label_names))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "explanation_names", tuple(self.explanation_names))
        if self.explanations is not None:
            explanations = np.asarray(self.explanations, dtype=np.int64)
            if explanations.shape != labels.shape:
                raise DatasetError("explanations must align with labels")
            _check_ids(explanations, len(self.explanation_names), "explanation")
            object.__setattr__(self, "explanations", explanations)

    # -- Sequence protocol -------------------------------------------------

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @overload
    def __getitem__(self, index: int) -> LabeledInstance: ...

    @overload
    def __getitem__(self, index: slice) -> Dataset: ...

    def __getitem__(self, index: int | slice) -> LabeledInstance | Dataset:
        if isinstance(index, slice):
            return self.subset(np.arange(len(self))[index])
        if not -len(self) <= index < len(self):
            raise IndexError(index)
        y = int(self.labels[index])
        explanation = None
        if self.explanations is not None:
            e = int(self.explanations[index])
            explanation = ExplanationId(id=e, name=self.explanation_names[e])
        return LabeledInstance(
            features=tuple(self.features[index].tolist()),
            label=LabelId(id=y, name=self.label_names[y]),
            explanation=explanation,
        )

    def __iter__(self) -> Iterator[LabeledInstance]:
        for index in range(len(self)):
            yield self[index]

    # -- Derived views -----------------------------------------------------

    @property
    def width(self) -> int:
        return int(self.features.shape[1])

    @property
    def has_explanations(self) -> bool:
        return self.explanations is not None

    def subset(self, indices: Sequence[int] | np.ndarray) -> Dataset:
        """Rows at *indices*, in the given order."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[idx],
            labels=self.labels[idx],
            label_names=self.label_names,
            feature_names=self.feature_names,
            explanations=None if self.explanations is None else self.explanations[idx],
            explanation_names=self.explanation_names,
            kind=self.kind,
            meta=dict(self.meta),
        )

    def without_explanations(self) -> Dataset:
        """The baseline (X, Y) view of this dataset."""
        return Dataset(
            features=self.features,
            labels=self.labels,
            label_names=self.label_names,
            feature_names=self.feature_names,
            explanations=None,
            explanation_names=self.explanation_names,
            kind=self.kind,
            meta=dict(self.meta),
        )

    def digest(self) -> str:
        """SHA-256 over features, labels and explanations."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.features).tobytes())
        h.update(np.ascontiguousarray(self.labels).tobytes())
        if self.explanations is not None:
            h.update(np.ascontiguousarray(self.explanations).tobytes())
        return h.hexdigest()

    def class_counts(self) -> dict[str, int]:
        """Instance count per label name."""
        counts = np.bincount(self.labels, minlength=len(self.label_names))
        return {name: int(n) for name, n in zip(self.label_names, counts, strict=True)}

    def explanation_counts(self) -> dict[str, int]:
        """Instance count per explanation name (empty for baseline data)."""
        if self.explanations is None:
            return {}
        counts = np.bincount(self.explanations, minlength=len(self.explanation_names))
        return {name: int(n) for name, n in zip(self.explanation_names, counts, strict=True)}

    @classmethod
    def from_instances(
        cls,
        instances: Iterable[LabeledInstance],
        label_names: Sequence[str],
        feature_names: Sequence[str],
        explanation_names: Sequence[str] = (),
        kind: str = "generic",
        meta: dict[str, object] | None = None,
    ) -> Dataset:
        """Pack labeled instances into columns.

        Raises:
            DatasetError: On empty input, ragged feature widths or instances that
                mix present and absent explanations.
        """
        rows: list[tuple[float, ...]] = []
        labels: list[int] = []
        explanations: list[int | None] = []
        for index, instance in enumerate(instances):
            if rows and len(instance.features) != len(rows[0]):
                raise DatasetError(
                    f"instance {index} has {len(instance.features)} features, "
                    f"expected {len(rows[0])}"
                )
            rows.append(instance.features)
            labels.append(instance.label.id)
            explanations.append(None if instance.explanation is None else instance.explanation.id)
        if not rows:
            raise DatasetError("no instances")
        present = {e is not None for e in explanations}
        if len(present) > 1:
            raise DatasetError("explanations must be present on all instances or on none")
        return cls(
            features=np.asarray(rows, dtype=np.float64),
            labels=np.asarray(labels, dtype=np.int64),
            label_names=tuple(label_names),
            feature_names=tuple(feature_names),
            explanations=np.asarray(explanations, dtype=np.int64) if True in present else None,
            explanation_names=tuple(explanation_names),
            kind=kind,
            meta=meta or {},
        )


def _check_ids(ids: np.ndarray, size: int, kind: str) -> None:
    if ids.size and (ids.min() < 0 or ids.max() >= size):
        raise DatasetError(f"{kind} ids must lie in 0..{size - 1}")
