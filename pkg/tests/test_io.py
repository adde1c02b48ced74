"""Tests for CSV datasets and codec sidecars on disk."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from tedkit.codec import fit_codec
from tedkit.datasets.base import Dataset
from tedkit.datasets.io import (
    read_codec,
    read_dataset,
    sidecar_path,
    write_codec,
    write_dataset,
)
from tedkit.errors import DatasetError


class TestDatasetFiles:
    def test_loan_reload(self, loan_ted: Dataset, tmp_path: Path) -> None:
        """Integer columns and two-decimal noise survive the CSV exactly."""
        path = write_dataset(loan_ted.subset(np.arange(50)), tmp_path / "loan.csv")
        reloaded = read_dataset(path)
        assert reloaded.kind == "loan"
        assert reloaded.meta["seed"] == 7
        assert reloaded.digest() == loan_ted.subset(np.arange(50)).digest()

    def test_header_line(self, loan_ted: Dataset, tmp_path: Path) -> None:
        path = write_dataset(loan_ted.subset(np.arange(5)), tmp_path / "loan.csv")
        first = path.read_text().splitlines()[0]
        assert first.startswith("# kind=loan")

    def test_generic_vocabulary_sorted(self, tmp_path: Path) -> None:
        path = tmp_path / "plain.csv"
        path.write_text("a,b,label\n1,2,yes\n3,4,no\n")
        dataset = read_dataset(path)
        assert dataset.kind == "generic"
        assert dataset.label_names == ("no", "yes")
        assert dataset.labels.tolist() == [1, 0]
        assert not dataset.has_explanations

    def test_unknown_label(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.csv"
        header = "trades,ere,nfrb,n0,n1,n2,n3,n4,label"
        path.write_text(f"# kind=loan\n{header}\n1,2,3,4,5,6,7,8,maybe\n")
        with pytest.raises(DatasetError, match="unknown label value"):
            read_dataset(path)

    def test_no_label_column(self, tmp_path: Path) -> None:
        path = tmp_path / "nolabel.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DatasetError, match="no 'label' column"):
            read_dataset(path)

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(DatasetError, match="cannot read dataset"):
            read_dataset(tmp_path / "absent.csv")


class TestCodecFiles:
    def test_sidecar_name(self) -> None:
        assert sidecar_path(Path("data/loan.csv")) == Path("data/loan.codec.json")

    def test_round_trip(self, loan_ted: Dataset, tmp_path: Path) -> None:
        codec = fit_codec(
            loan_ted, labels=loan_ted.label_names, explanations=loan_ted.explanation_names
        )
        path = write_codec(codec, tmp_path / "loan.codec.json")
        assert read_codec(path) == codec
