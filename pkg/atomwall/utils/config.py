"""Application settings and YAML run configuration"""

from contextvars import ContextVar
from pathlib import Path
from typing import Any

import yaml
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from atomwall.models.exceptions import ConfigFileError
from atomwall.utils.logging import get_logger

logger = get_logger("config")

# Mapping loaded from the YAML configuration of the current run
current_config: ContextVar[dict[str, Any]] = ContextVar("current_config", default={})  # noqa: B039


class Settings(BaseSettings):
    """Environment driven settings"""

    model_config = SettingsConfigDict(env_prefix="", extra="ignore")

    app_config_file: Path | None = Field(default=None, validation_alias="APP_CONFIG_FILE")
    log_level: str = Field(default="INFO", validation_alias="LOG_LEVEL")
    dev_mode: bool = Field(default=False, validation_alias="DEV_MODE")
    cache_dir: Path | None = Field(default=None, validation_alias="ATOMWALL_CACHE_DIR")
    workers: int = Field(default=1, ge=1, validation_alias="ATOMWALL_WORKERS")
    data_dir: Path | None = Field(default=None, validation_alias="ATOMWALL_DATA_DIR")


def get_settings() -> Settings:
    """Read the settings from the environment"""
    return Settings()


def read_config(path: Path | str | None) -> dict[str, Any]:
    """Load the YAML configuration file and publish it in the context

    Args:
        path (Path | str | None): location of the file, nothing is loaded when None

    Returns:
        dict[str, Any]: the configuration mapping
    """
    if path is None:
        current_config.set({})
        return {}
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as stream:
            content = yaml.safe_load(stream) or {}
    except OSError as ose:
        message = f"Cannot read configuration file {path}: {ose.strerror}"
        logger.exception(message)
        raise ConfigFileError(message) from ose
    except yaml.YAMLError as ye:
        message = f"Configuration file {path} is not valid YAML"
        logger.exception(message)
        raise ConfigFileError(message) from ye
    if not isinstance(content, dict):
        message = f"Configuration file {path} must contain a mapping"
        raise ConfigFileError(message)
    logger.debug("Configuration loaded from %s: %s", path, content)
    current_config.set(content)
    return content
