"""Root logger handlers for the btnn command line, driven by the `logging` config section."""

import logging
import sys
from datetime import date
from pathlib import Path
from typing import Any, List, Mapping, Optional

from ..config import DEFAULTS, get_env

HANDLER_PREFIX = "btnn."


def resolve_level(section: Mapping[str, Any], verbose: bool = False) -> int:
    """-v wins, then BTNN_LOG_LEVEL, then logging.level; unknown names fall back to INFO."""
    if verbose:
        return logging.DEBUG
    name = get_env("BTNN_LOG_LEVEL") or section.get("level") or "INFO"
    level = logging.getLevelName(str(name).upper())
    return level if isinstance(level, int) else logging.INFO


def _console_handler(formatter: logging.Formatter) -> logging.Handler:
    # stdout carries detection and evaluation output
    handler = logging.StreamHandler(sys.stderr)
    handler.set_name(HANDLER_PREFIX + "console")
    handler.setFormatter(formatter)
    return handler


def _file_handler(log_dir: Optional[str], formatter: logging.Formatter) -> Optional[logging.Handler]:
    """A dated log file, only when log_dir names an existing directory."""
    if not log_dir or not Path(log_dir).is_dir():
        return None
    handler = logging.FileHandler(Path(log_dir) / f"btnn_{date.today():%Y%m%d}.log")
    handler.set_name(HANDLER_PREFIX + "file")
    handler.setFormatter(formatter)
    return handler


def setup_logging(section: Optional[Mapping[str, Any]] = None, verbose: bool = False) -> List[logging.Handler]:
    """
    Install the btnn handlers on the root logger, replacing any installed by an
    earlier call. Handlers added by other code are left alone.

    Args:
        section: the `logging` config section; missing keys take the defaults
        verbose: force DEBUG

    Returns:
        The handlers that were installed
    """
    settings = {**DEFAULTS["logging"], **(section or {})}
    formatter = logging.Formatter(fmt=settings["format"], datefmt=settings["datefmt"])
    handlers = [_console_handler(formatter)]
    file_handler = _file_handler(settings.get("log_dir"), formatter)
    if file_handler is not None:
        handlers.append(file_handler)

    root = logging.getLogger()
    for handler in list(root.handlers):
        if (handler.get_name() or "").startswith(HANDLER_PREFIX):
            root.removeHandler(handler)
            handler.close()
    for handler in handlers:
        root.addHandler(handler)
    root.setLevel(resolve_level(settings, verbose))
    return handlers
