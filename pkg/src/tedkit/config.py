"""Application configuration via pydantic-settings plus the YAML experiment protocol."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Any

import structlog
import yaml
from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from tedkit.errors import ConfigError
from tedkit.models import ProtocolConfig

logger = structlog.get_logger(__name__)

DEFAULT_PROTOCOL_PATH = Path(__file__).resolve().parents[2] / "config" / "protocol.yaml"


class Settings(BaseSettings):
    """All runtime configuration, loaded from ``TEDKIT_*`` environment / .env file."""

    seed: int = 7
    log_level: str = "INFO"
    environment: str = "development"  # development | production
    n_jobs: int = -1
    protocol_path: Path = DEFAULT_PROTOCOL_PATH

    model_config = SettingsConfigDict(
        env_prefix="TEDKIT_", env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )


# Module-level singleton; imported everywhere.
settings = Settings()


def read_yaml(path: Path) -> dict[str, Any]:
    """Parse a YAML mapping file.

    Raises:
        ConfigError: If the file is unreadable or its top level is not a mapping.
    """
    try:
        with path.open("r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must contain a mapping at top level")
    return raw


@lru_cache(maxsize=4)
def load_protocol(path: Path | None = None) -> ProtocolConfig:
    """Load and cache the experiment protocol.

    Falls back to built-in defaults when the file is missing or malformed.

    Args:
        path: Protocol YAML; defaults to ``settings.protocol_path``.

    Returns:
        Validated :class:`ProtocolConfig`.
    """
    path = path or settings.protocol_path
    try:
        protocol = ProtocolConfig.model_validate(read_yaml(path))
        logger.info("protocol.loaded", path=str(path))
        return protocol
    except (ConfigError, ValidationError) as exc:
        logger.warning("protocol.load_failed", path=str(path), error=str(exc))
        return ProtocolConfig()
