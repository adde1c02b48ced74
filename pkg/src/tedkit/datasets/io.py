"""CSV datasets and JSON sidecars on disk.

CSV layout: optional ``# key=value ...`` header comment, one column per feature,
then ``label`` and (TED data only) ``explanation``. Labels and explanations are
written by name.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import structlog

from tedkit.codec import CodecTable, codec_from_json, codec_to_json
from tedkit.datasets import loan, tictactoe
from tedkit.datasets.base import Dataset
from tedkit.errors import DatasetError

logger = structlog.get_logger(__name__)

LABEL_COLUMN = "label"
EXPLANATION_COLUMN = "explanation"

_VOCABULARIES: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "tictactoe": (tictactoe.MOVE_NAMES, tictactoe.REASON_NAMES),
    "loan": (loan.LABEL_NAMES, loan.EXPLANATION_NAMES),
}


def sidecar_path(dataset_path: Path) -> Path:
    """``data/loan.csv`` -> ``data/loan.codec.json``."""
    return dataset_path.with_suffix(".codec.json")


def _header(dataset: Dataset) -> str:
    items = {"kind": dataset.kind, **dataset.meta}
    return "# " + " ".join(f"{key}={value}" for key, value in items.items()) + "\n"


def _parse_header(path: Path) -> dict[str, str]:
    with path.open("r", encoding="utf-8") as fh:
        first = fh.readline()
    if not first.startswith("#"):
        return {}
    pairs = (token.split("=", 1) for token in first[1:].split() if "=" in token)
    return {key: value for key, value in pairs}


def _coerce_meta(value: str) -> object:
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


def _frame(dataset: Dataset) -> pd.DataFrame:
    columns: dict[str, Any] = {}
    for j, name in enumerate(dataset.feature_names):
        column = dataset.features[:, j]
        integral = bool(np.all(np.mod(column, 1.0) == 0.0))
        columns[name] = column.astype(np.int64) if integral else column
    columns[LABEL_COLUMN] = [dataset.label_names[y] for y in dataset.labels.tolist()]
    if dataset.explanations is not None:
        columns[EXPLANATION_COLUMN] = [
            dataset.explanation_names[e] for e in dataset.explanations.tolist()
        ]
    return pd.DataFrame(columns)


def write_dataset(dataset: Dataset, path: Path) -> Path:
    """Write *dataset* as CSV with a provenance header line.

    Raises:
        DatasetError: If the file cannot be written.
    """
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write(_header(dataset))
            _frame(dataset).to_csv(fh, index=False, lineterminator="\n")
    except OSError as exc:
        raise DatasetError(f"cannot write dataset {path}: {exc}") from exc
    logger.info("dataset.written", path=str(path), instances=len(dataset))
    return path


def _ids(values: pd.Series, vocabulary: tuple[str, ...], column: str) -> np.ndarray:
    index = {name: i for i, name in enumerate(vocabulary)}
    unknown = sorted(set(values) - set(index))
    if unknown:
        raise DatasetError(f"unknown {column} value(s): {', '.join(map(str, unknown[:5]))}")
    return np.array([index[v] for v in values], dtype=np.int64)


def _detect_kind(header: dict[str, str], feature_names: list[str]) -> str:
    if header.get("kind") in _VOCABULARIES:
        return header["kind"]
    if feature_names == list(tictactoe.FEATURE_NAMES):
        return "tictactoe"
    if feature_names == list(loan.FEATURE_NAMES):
        return "loan"
    return "generic"


def read_dataset(path: Path) -> Dataset:
    """Load a CSV written by :func:`write_dataset` (or any CSV with a ``label`` column).

    Raises:
        DatasetError: If the file is unreadable, empty, lacks a label column or
            holds values outside the vocabulary of its kind.
    """
    try:
        frame = pd.read_csv(
            path,
            comment="#",
            dtype={LABEL_COLUMN: str, EXPLANATION_COLUMN: str},
            keep_default_na=False,
        )
        header = _parse_header(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc
    if LABEL_COLUMN not in frame.columns:
        raise DatasetError(f"dataset {path} has no '{LABEL_COLUMN}' column")
    if frame.empty:
        raise DatasetError(f"dataset {path} has no rows")

    feature_names = [c for c in frame.columns if c not in (LABEL_COLUMN, EXPLANATION_COLUMN)]
    kind = _detect_kind(header, feature_names)
    has_explanations = EXPLANATION_COLUMN in frame.columns
    if kind in _VOCABULARIES:
        label_names, explanation_names = _VOCABULARIES[kind]
    else:
        label_names = tuple(sorted(set(frame[LABEL_COLUMN])))
        explanation_names = (
            tuple(sorted(set(frame[EXPLANATION_COLUMN]))) if has_explanations else ()
        )

    try:
        features = frame[feature_names].to_numpy(dtype=np.float64)
    except ValueError as exc:
        raise DatasetError(f"non-numeric feature values in {path}: {exc}") from exc

    meta = {k: _coerce_meta(v) for k, v in header.items() if k != "kind"}
    dataset = Dataset(
        features=features,
        labels=_ids(frame[LABEL_COLUMN], label_names, LABEL_COLUMN),
        label_names=label_names,
        feature_names=tuple(feature_names),
        explanations=(
            _ids(frame[EXPLANATION_COLUMN], explanation_names, EXPLANATION_COLUMN)
            if has_explanations
            else None
        ),
        explanation_names=explanation_names,
        kind=kind,
        meta=meta,
    )
    logger.info("dataset.read", path=str(path), kind=kind, instances=len(dataset))
    return dataset


def write_json(document: dict[str, Any], path: Path) -> Path:
    """Deterministic pretty JSON."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot write {path}: {exc}") from exc
    return path


def read_json(path: Path) -> dict[str, Any]:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc


def write_codec(codec: CodecTable, path: Path) -> Path:
    return write_json(codec_to_json(codec), path)


def read_codec(path: Path) -> CodecTable:
    return codec_from_json(read_json(path))
