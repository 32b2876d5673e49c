# qaoa_rl/utils/__init__.py

from .artifacts import CsvLog, load_schedule, save_rows_csv, save_schedule
from .logging_utils import setup_logging

__all__ = [
    "CsvLog",
    "load_schedule",
    "save_rows_csv",
    "save_schedule",
    "setup_logging",
]
