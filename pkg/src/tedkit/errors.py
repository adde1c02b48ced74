"""Exception hierarchy shared by every tedkit module."""

from __future__ import annotations


class TedkitError(RuntimeError):
    """Base class; the CLI turns these into ``error: ...`` lines and exit status 1."""


class CodecError(TedkitError):
    """Composite-class encoding or decoding failed."""


class BoardError(TedkitError):
    """A tic-tac-toe board is malformed, illegal or terminal."""


class DatasetError(TedkitError):
    """A dataset is empty, inconsistent or cannot be read or written."""


class LearnerError(TedkitError):
    """A classifier received incompatible inputs or a broken artifact."""


class ExperimentError(TedkitError):
    """The experimental protocol was asked to do something it does not allow."""


class ConfigError(TedkitError):
    """Run configuration or protocol configuration is invalid."""
