"""
Logging setup.

Structured logs go to stderr so that stdout stays free for command output
(``verify --json -``). At DEBUG they are rendered for the console, at every
other level as one JSON object per line.
"""
import logging
import sys
from typing import Any, Dict, Optional

import structlog

from app.config import get_settings


LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _resolve_level(log_level: Optional[str]) -> str:
    level = (log_level or get_settings().log_level).strip().upper()
    if level not in LEVELS:
        raise ValueError(f"unknown log level {log_level!r}; expected one of {', '.join(LEVELS)}")
    return level


def _add_app_name(app_name: str):
    def processor(logger: Any, method_name: str, event_dict: Dict[str, Any]) -> Dict[str, Any]:
        event_dict.setdefault("app", app_name)
        return event_dict
    return processor


def setup_logging(log_level: Optional[str] = None) -> str:
    """Configure structlog over the stdlib root logger.

    Args:
        log_level: DEBUG, INFO, WARNING or ERROR (default: WIGNER_FLOW_LOG_LEVEL)

    Returns:
        The level actually applied

    Raises:
        ValueError: for unknown levels
    """
    level = _resolve_level(log_level)
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, level),
        force=True,
    )

    renderer = structlog.dev.ConsoleRenderer() if level == "DEBUG" else structlog.processors.JSONRenderer()
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            _add_app_name(get_settings().app_name),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )
    return level


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    return structlog.get_logger(name)
