"""Structlog setup for the CLI and the experiment runs.

Logs always go to a stream separate from reports (stderr by default), as
newline-delimited JSON in production and as console lines otherwise.
"""

from __future__ import annotations

import logging
import sys
from typing import TextIO

import structlog

from tedkit.errors import ConfigError

LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

# Libraries whose INFO output drowns the experiment log.
_QUIET = ("joblib",)


def parse_level(name: str) -> int:
    """Numeric level for a level name, case-insensitive.

    Raises:
        ConfigError: If *name* is not one of :data:`LEVELS`.
    """
    upper = name.upper()
    if upper not in LEVELS:
        raise ConfigError(f"unknown log level {name!r}; choose from {', '.join(LEVELS)}")
    return int(getattr(logging, upper))


def _renderer(environment: str, stream: TextIO) -> structlog.types.Processor:
    if environment == "production":
        return structlog.processors.JSONRenderer(sort_keys=True)
    isatty = getattr(stream, "isatty", None)
    return structlog.dev.ConsoleRenderer(colors=bool(isatty and isatty()))


def configure_logging(
    environment: str,
    log_level: str = "INFO",
    stream: TextIO | None = None,
) -> None:
    """Route structlog and stdlib records through one handler on *stream*.

    Args:
        environment: ``"production"`` for JSON lines; anything else renders
                     for a console.
        log_level:   Level name, e.g. ``"INFO"``.
        stream:      Destination; ``sys.stderr`` when omitted, so that reports
                     on stdout stay machine-readable.

    Raises:
        ConfigError: On an unknown level name.
    """
    level = parse_level(log_level)
    stream = stream if stream is not None else sys.stderr

    shared: list[structlog.types.Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]
    structlog.configure(
        processors=[*shared, structlog.stdlib.ProcessorFormatter.wrap_for_formatter],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    handler = logging.StreamHandler(stream)
    handler.setFormatter(
        structlog.stdlib.ProcessorFormatter(
            processor=_renderer(environment, stream), foreign_pre_chain=shared
        )
    )
    root = logging.getLogger()
    root.handlers = [handler]
    root.setLevel(level)
    for name in _QUIET:
        logging.getLogger(name).setLevel(max(level, logging.WARNING))
