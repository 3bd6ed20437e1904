"""Logging helpers shared by every module of the package"""

import logging
import os
import sys
from contextvars import ContextVar
from typing import Any

LOG_FORMAT = "%(asctime)s [%(levelname)8s] %(message)s (%(filename)s:%(lineno)s)"
ROOT_LOGGER_NAME = "atomwall"

# Identifier of the computation in progress, prefixed to every record
current_run: ContextVar[str | None] = ContextVar("current_run", default=None)

_configured = False


class AtomwallLoggerAdapter(logging.LoggerAdapter):
    """Logger adapter adding the current run identifier to the messages"""

    def process(self, msg: Any, kwargs: Any) -> tuple[Any, Any]:  # noqa: ANN401
        """Prefix the message with the run identifier when one is set"""
        run_id = current_run.get()
        if run_id is None:
            return msg, kwargs
        return f"[{run_id}] {msg}", kwargs


def configure_logging(level: str | None = None) -> None:
    """Install the package handler once, level from LOG_LEVEL when not given"""
    global _configured  # noqa: PLW0603
    root = logging.getLogger(ROOT_LOGGER_NAME)
    root.setLevel((level or os.environ.get("LOG_LEVEL", "INFO")).upper())
    if _configured:
        return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    _configured = True


def get_logger(name: str) -> AtomwallLoggerAdapter:
    """Return the logger of a feature, nested under the package logger"""
    if not name.startswith(ROOT_LOGGER_NAME):
        name = f"{ROOT_LOGGER_NAME}.{name}"
    return AtomwallLoggerAdapter(logging.getLogger(name), {})
