"""Tests for settings, the protocol file and logging setup."""

from __future__ import annotations

import io
import json
import logging
from collections.abc import Iterator
from pathlib import Path

import pytest
import structlog

from tedkit.config import DEFAULT_PROTOCOL_PATH, Settings, load_protocol, read_yaml
from tedkit.errors import ConfigError
from tedkit.models import ProtocolConfig
from tedkit.utils.logging import configure_logging, parse_level


class TestSettings:
    def test_defaults(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.delenv("TEDKIT_SEED", raising=False)
        assert Settings(_env_file=None).seed == 7

    def test_env_prefix(self, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("TEDKIT_SEED", "21")
        monkeypatch.setenv("TEDKIT_N_JOBS", "2")
        settings = Settings(_env_file=None)
        assert (settings.seed, settings.n_jobs) == (21, 2)


class TestProtocol:
    def test_shipped_file(self) -> None:
        """The repository protocol matches the published setup."""
        protocol = load_protocol(DEFAULT_PROTOCOL_PATH)
        assert protocol.train_fraction == 0.9
        assert protocol.tictactoe.mlp.hidden_units == 200
        assert (protocol.loan.forest.n_trees, protocol.loan.forest.min_samples_leaf) == (100, 5)
        assert protocol.loan.n_seeds == 10
        assert protocol.loan.derive_y_from_e

    def test_missing_file_falls_back(self, tmp_path: Path) -> None:
        assert load_protocol(tmp_path / "absent.yaml") == ProtocolConfig()

    def test_partial_file(self, tmp_path: Path) -> None:
        path = tmp_path / "protocol.yaml"
        path.write_text("loan:\n  n: 500\n  forest:\n    n_trees: 10\n")
        protocol = load_protocol(path)
        assert (protocol.loan.n, protocol.loan.forest.n_trees) == (500, 10)
        assert protocol.loan.forest.min_samples_leaf == 5

    def test_read_yaml_rejects_list(self, tmp_path: Path) -> None:
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="mapping"):
            read_yaml(path)

    def test_read_yaml_empty(self, tmp_path: Path) -> None:
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert read_yaml(path) == {}


class TestLogging:
    @pytest.fixture(autouse=True)
    def _restore(self) -> Iterator[None]:
        yield
        logging.getLogger().handlers = []

    def test_parse_level(self) -> None:
        assert parse_level("debug") == logging.DEBUG
        with pytest.raises(ConfigError, match="unknown log level"):
            parse_level("chatty")

    def test_production_writes_json_lines(self) -> None:
        stream = io.StringIO()
        configure_logging("production", "INFO", stream)
        structlog.get_logger("tedkit.tests").info("tests.event", rows=3)
        record = json.loads(stream.getvalue().splitlines()[-1])
        assert (record["event"], record["rows"], record["level"]) == ("tests.event", 3, "info")

    def test_level_filters(self) -> None:
        stream = io.StringIO()
        configure_logging("production", "WARNING", stream)
        structlog.get_logger("tedkit.tests").info("tests.hidden")
        assert stream.getvalue() == ""
