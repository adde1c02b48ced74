"""Composite-class codec: fuses each (label, explanation) pair into one class id and back.

A fitted :class:`CodecTable` is immutable and can be shared freely between readers.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from typing import Any

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, PrivateAttr, ValidationError, model_validator

from tedkit.errors import CodecError
from tedkit.models import CompositeId, ExplanationId, LabeledInstance, LabelId

logger = structlog.get_logger(__name__)


class CodecTable(BaseModel):
    """Bijection between observed (label, explanation) pairs and composite ids.

    ``pairs[c]`` is the ``(label_id, explanation_id)`` pair of composite ``c``.
    ``e_to_y`` maps explanation id to label id and is ``None`` unless every
    explanation co-occurred with exactly one label at fit time.
    """

    model_config = ConfigDict(frozen=True)

    labels: tuple[str, ...]
    explanations: tuple[str, ...]
    pairs: tuple[tuple[int, int], ...]
    e_to_y: dict[int, int] | None = None

    _index: dict[tuple[int, int], int] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _check_pairs(self) -> CodecTable:
        if len(set(self.pairs)) != len(self.pairs):
            raise ValueError("duplicate (label, explanation) pair")
        for y, e in self.pairs:
            if not 0 <= y < len(self.labels):
                raise ValueError(f"label id {y} outside vocabulary of {len(self.labels)}")
            if not 0 <= e < len(self.explanations):
                raise ValueError(
                    f"explanation id {e} outside vocabulary of {len(self.explanations)}"
                )
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("label names must be unique")
        if len(set(self.explanations)) != len(self.explanations):
            raise ValueError("explanation names must be unique")
        return self

    def model_post_init(self, __context: Any) -> None:
        self._index = {pair: c for c, pair in enumerate(self.pairs)}

    @property
    def n_composites(self) -> int:
        return len(self.pairs)

    @property
    def pair_to_composite(self) -> dict[tuple[int, int], int]:
        return dict(self._index)

    @property
    def composite_to_pair(self) -> dict[int, tuple[int, int]]:
        return dict(enumerate(self.pairs))

    def label(self, label_id: int) -> LabelId:
        return LabelId(id=label_id, name=self.labels[label_id])

    def explanation(self, explanation_id: int) -> ExplanationId:
        return ExplanationId(id=explanation_id, name=self.explanations[explanation_id])

    def composite_name(self, composite: int) -> str:
        y, e = self.pairs[composite]
        return f"{self.labels[y]}/{self.explanations[e]}"


def _functional_map(pairs: Sequence[tuple[int, int]]) -> dict[int, int] | None:
    """Return explanation -> label when each explanation has a single label, else None."""
    mapping: dict[int, int] = {}
    for y, e in pairs:
        if mapping.setdefault(e, y) != y:
            return None
    return dict(sorted(mapping.items()))


def _vocabulary(
    seen: dict[int, str], given: Sequence[str] | None, kind: str
) -> tuple[str, ...]:
    if given is not None:
        for idx, name in seen.items():
            if idx >= len(given) or given[idx] != name:
                raise CodecError(f"{kind} {idx} ({name!r}) does not match the supplied vocabulary")
        return tuple(given)
    if sorted(seen) != list(range(len(seen))):
        raise CodecError(f"{kind} ids are not dense; pass the full vocabulary")
    return tuple(seen[idx] for idx in range(len(seen)))


def fit_codec(
    instances: Iterable[LabeledInstance],
    labels: Sequence[str] | None = None,
    explanations: Sequence[str] | None = None,
) -> CodecTable:
    """Assign a composite id to every distinct (label, explanation) pair.

    Ids follow first-occurrence order, so fitting the same sequence twice yields
    the same table.

    Args:
        instances:    Training instances; all must carry an explanation.
        labels:       Optional full label vocabulary (names by id). Needed when
                      some label ids never occur in *instances*.
        explanations: Optional full explanation vocabulary.

    Returns:
        The fitted :class:`CodecTable`.

    Raises:
        CodecError: On empty input, a missing explanation (naming the instance
            index) or ids inconsistent with the vocabularies.
    """
    pairs: dict[tuple[int, int], int] = {}
    seen_labels: dict[int, str] = {}
    seen_explanations: dict[int, str] = {}
    count = 0
    for index, instance in enumerate(instances):
        if instance.explanation is None:
            raise CodecError(f"instance {index} has no explanation")
        y, e = instance.label.id, instance.explanation.id
        seen_labels.setdefault(y, instance.label.name)
        seen_explanations.setdefault(e, instance.explanation.name)
        pairs.setdefault((y, e), len(pairs))
        count += 1
    if count == 0:
        raise CodecError("no instances")

    ordered = tuple(pairs)
    try:
        codec = CodecTable(
            labels=_vocabulary(seen_labels, labels, "label"),
            explanations=_vocabulary(seen_explanations, explanations, "explanation"),
            pairs=ordered,
            e_to_y=_functional_map(ordered),
        )
    except ValidationError as exc:
        raise CodecError(str(exc)) from exc

    logger.info(
        "codec.fitted",
        instances=count,
        composites=codec.n_composites,
        functional=codec.e_to_y is not None,
    )
    return codec


def _id(value: LabelId | ExplanationId | CompositeId | int) -> int:
    return value if isinstance(value, int) else value.id


def encode(
    codec: CodecTable, label: LabelId | int, explanation: ExplanationId | int
) -> CompositeId:
    """Return the composite id of a fitted (label, explanation) pair.

    Raises:
        CodecError: If the pair was not seen at fit time.
    """
    y, e = _id(label), _id(explanation)
    try:
        return CompositeId(id=codec._index[(y, e)])
    except KeyError:
        y_name = codec.labels[y] if 0 <= y < len(codec.labels) else str(y)
        e_name = codec.explanations[e] if 0 <= e < len(codec.explanations) else str(e)
        raise CodecError(f"unknown pair: label {y_name!r} with explanation {e_name!r}") from None


def decode(codec: CodecTable, composite: CompositeId | int) -> tuple[LabelId, ExplanationId]:
    """Split a composite id back into its label and explanation.

    Raises:
        CodecError: If the id is outside ``0 .. n_composites - 1``.
    """
    c = _id(composite)
    if not 0 <= c < codec.n_composites:
        raise CodecError(f"composite id {c} out of range 0..{codec.n_composites - 1}")
    y, e = codec.pairs[c]
    return codec.label(y), codec.explanation(e)


def derive_label(codec: CodecTable, explanation: ExplanationId | int) -> LabelId:
    """Recover the label implied by an explanation.

    Raises:
        CodecError: If explanations do not determine labels in this codec, or the
            explanation was never seen.
    """
    if codec.e_to_y is None:
        raise CodecError("explanations do not determine labels")
    e = _id(explanation)
    if e not in codec.e_to_y:
        raise CodecError(f"explanation id {e} was not seen at fit time")
    return codec.label(codec.e_to_y[e])


def canonical_order(codec: CodecTable) -> np.ndarray:
    """Composite ids sorted by ``(label id, explanation id)``.

    Position ``k`` holds the composite a learner sees as class ``k``. With a
    single explanation this is the plain label order.
    """
    return np.array(
        sorted(range(codec.n_composites), key=codec.pairs.__getitem__), dtype=np.int64
    )


def explanations_for(codec: CodecTable, label: LabelId | int) -> list[ExplanationId]:
    """Every explanation the codec can emit together with *label*, in composite order."""
    y = _id(label)
    return [codec.explanation(e) for pair_y, e in codec.pairs if pair_y == y]


# ---------------------------------------------------------------------------
# Vectorised forms used by the pipeline
# ---------------------------------------------------------------------------


def encode_many(
    codec: CodecTable,
    labels: np.ndarray,
    explanations: np.ndarray,
    strict: bool = True,
) -> np.ndarray:
    """Encode aligned label / explanation arrays.

    With ``strict=False`` pairs unknown to the codec become ``-1`` instead of
    raising.
    """
    out = np.empty(len(labels), dtype=np.int64)
    for i, (y, e) in enumerate(zip(labels.tolist(), explanations.tolist(), strict=True)):
        c = codec._index.get((y, e))
        if c is None:
            if strict:
                encode(codec, y, e)
            c = -1
        out[i] = c
    return out


def decode_many(codec: CodecTable, composites: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decode an array of composite ids into (label ids, explanation ids)."""
    composites = np.asarray(composites, dtype=np.int64)
    if composites.size and (composites.min() < 0 or composites.max() >= codec.n_composites):
        bad = composites[(composites < 0) | (composites >= codec.n_composites)][0]
        raise CodecError(f"composite id {bad} out of range 0..{codec.n_composites - 1}")
    table = np.asarray(codec.pairs, dtype=np.int64).reshape(-1, 2)
    return table[composites, 0], table[composites, 1]


def derive_many(codec: CodecTable, explanations: np.ndarray) -> np.ndarray:
    """Vectorised :func:`derive_label`."""
    if codec.e_to_y is None:
        raise CodecError("explanations do not determine labels")
    return np.array([codec.e_to_y[e] for e in np.asarray(explanations).tolist()], dtype=np.int64)


# ---------------------------------------------------------------------------
# JSON sidecar
# ---------------------------------------------------------------------------


def codec_to_json(codec: CodecTable) -> dict[str, Any]:
    """Serialise as ``{"labels": [...], "explanations": [...], "pairs": [[y, e, c], ...]}``."""
    return {
        "labels": list(codec.labels),
        "explanations": list(codec.explanations),
        "pairs": [[y, e, c] for c, (y, e) in enumerate(codec.pairs)],
    }


def codec_from_json(data: dict[str, Any]) -> CodecTable:
    """Rebuild a codec from its sidecar form; ``e_to_y`` is recomputed.

    Raises:
        CodecError: If the document is malformed or composite ids are not dense.
    """
    try:
        rows = sorted((int(c), int(y), int(e)) for y, e, c in data["pairs"])
        if [c for c, _, _ in rows] != list(range(len(rows))):
            raise CodecError("composite ids in sidecar are not dense")
        pairs = tuple((y, e) for _, y, e in rows)
        return CodecTable(
            labels=tuple(data["labels"]),
            explanations=tuple(data["explanations"]),
            pairs=pairs,
            e_to_y=_functional_map(pairs),
        )
    except (KeyError, TypeError, ValueError, ValidationError) as exc:
        raise CodecError(f"malformed codec document: {exc}") from exc
