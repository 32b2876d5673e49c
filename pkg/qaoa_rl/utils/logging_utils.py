# qaoa_rl/utils/logging_utils.py
import logging
import os
import sys
from typing import List, Optional

from qaoa_rl.config_loader import AppConfig

DEFAULT_LOG_LEVEL_STR = "INFO"
DEFAULT_LOG_FILE_MODE = "a"
DEFAULT_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _numeric_level(level_str: str) -> Optional[int]:
    numeric = getattr(logging, level_str.upper(), None)
    return numeric if isinstance(numeric, int) else None


def setup_logging(app_config: AppConfig, level_override: Optional[str] = None) -> str:
    """
    Configures the root logger from the ``logging`` section of the app config.
    Call once at startup. Log lines go to stderr so stdout stays free for results.

    Returns:
        The effective global log level name (e.g. "INFO").
    """
    settings = app_config.logging
    level_str = (level_override or settings.level or DEFAULT_LOG_LEVEL_STR).upper()
    numeric_level = _numeric_level(level_str)
    if numeric_level is None:
        print(f"Warning: Invalid log level '{level_str}'. Defaulting to {DEFAULT_LOG_LEVEL_STR}.", file=sys.stderr)
        level_str = DEFAULT_LOG_LEVEL_STR
        numeric_level = logging.INFO

    log_format_str = settings.format or DEFAULT_LOG_FORMAT
    formatter = logging.Formatter(log_format_str)
    handlers: List[logging.Handler] = []

    file_error: Optional[Exception] = None
    if settings.file_path:
        try:
            log_dir = os.path.dirname(settings.file_path)
            if log_dir:
                os.makedirs(log_dir, exist_ok=True)
            file_handler = logging.FileHandler(settings.file_path, mode=settings.file_mode or DEFAULT_LOG_FILE_MODE)
            file_handler.setFormatter(formatter)
            handlers.append(file_handler)
        except OSError as e:
            file_error = e

    stream_handler = logging.StreamHandler()
    stream_handler.setFormatter(formatter)
    handlers.append(stream_handler)

    logging.basicConfig(level=numeric_level, format=log_format_str, handlers=handlers, force=True)

    for name, level in (settings.levels or {}).items():
        per_logger = _numeric_level(level)
        if per_logger is None:
            logging.warning(f"Ignoring invalid level '{level}' for logger '{name}'")
            continue
        logging.getLogger(name).setLevel(per_logger)

    logging.debug(f"Logging system initialized. Level: {level_str}.")
    if file_error is not None:
        logging.warning(f"File logging to '{settings.file_path}' was NOT configured: {file_error}")
    elif settings.file_path:
        logging.debug(f"Logging to file: '{settings.file_path}' (mode: '{settings.file_mode}')")
    return level_str
