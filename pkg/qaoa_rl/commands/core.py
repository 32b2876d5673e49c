# qaoa_rl/commands/core.py
from concurrent.futures import Executor
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Dict, Optional

if TYPE_CHECKING:
    from qaoa_rl.commands.io import AbstractOutputHandler
    from qaoa_rl.config_loader import AppConfig


@dataclass
class CommandContext:
    """
    Context passed to command handlers: output channel, app configuration,
    the resolved arguments and the shared worker pool.
    """

    command_name: str
    output: "AbstractOutputHandler"
    app_config: "AppConfig"
    parsed_args: Dict[str, Any]
    threads: int = 1
    executor: Optional[Executor] = None
