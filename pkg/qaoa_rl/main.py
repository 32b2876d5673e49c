# qaoa_rl/main.py
import asyncio
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError
from rich.console import Console

from qaoa_rl.commands.core import CommandContext
from qaoa_rl.commands.definition import CommandDefinition, ParameterDefinition
from qaoa_rl.commands.experiment_commands import app_defaults, get_experiment_commands
from qaoa_rl.commands.io import AbstractOutputHandler, RichOutputHandler
from qaoa_rl.commands.parser import parse_tokens, resolve_arguments
from qaoa_rl.config_loader import DEFAULT_CONFIG_PATH, load_app_config, load_flag_file, threads_from_env
from qaoa_rl.errors import ArgumentParsingError, QaoaRlError
from qaoa_rl.utils.logging_utils import setup_logging

logger = logging.getLogger(__name__)

GLOBAL_PARAMETERS = [
    ParameterDefinition(name="config", description="JSON or YAML file supplying flag values."),
    ParameterDefinition(name="threads", param_type=int, description="Worker threads (default: QAOA_RL_THREADS or all cores)."),
    ParameterDefinition(name="log_level", description="DEBUG, INFO, WARNING or ERROR."),
]


def command_table(commands: Sequence[CommandDefinition]) -> Dict[str, CommandDefinition]:
    return {command.name: command for command in commands}


def print_help(console: Console, commands: Sequence[CommandDefinition]) -> None:
    console.print("[bold]usage:[/bold] qaoa-rl <command> [--option value ...]\n")
    for command in commands:
        console.print(f"[bold cyan]{command.name}[/bold cyan]  {command.description or ''}")
        for param in command.parameters:
            marker = " (required)" if param.required else ""
            console.print(f"    {param.flag}{marker}  {param.description or ''}")
    console.print("\nglobal options: " + ", ".join(p.flag for p in GLOBAL_PARAMETERS))


def _error_line(exc: BaseException, exit_code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": exit_code}
    print(json.dumps(payload), file=sys.stderr)
    return exit_code


def _resolve_threads(requested: Optional[int], app_threads: Optional[int]) -> int:
    threads = requested if requested is not None else (threads_from_env() or app_threads or os.cpu_count() or 1)
    if threads < 1:
        raise ArgumentParsingError(f"--threads must be >= 1, got {threads}")
    return threads


def run_command(
    argv: List[str],
    output: Optional[AbstractOutputHandler] = None,
    config_path: Optional[str] = DEFAULT_CONFIG_PATH,
) -> None:
    """Parse ``argv`` (command first), configure logging and run the handler to completion."""
    commands = get_experiment_commands()
    table = command_table(commands)
    if not argv:
        raise ArgumentParsingError(f"No command given. Available: {', '.join(c.name for c in commands)}")
    command = table.get(argv[0])
    if command is None:
        raise ArgumentParsingError(f"Unknown command '{argv[0]}'. Available: {', '.join(c.name for c in commands)}")

    params = [*command.parameters, *GLOBAL_PARAMETERS]
    explicit = parse_tokens(argv[1:], params)
    app_config = load_app_config(config_path)
    setup_logging(app_config, explicit.get("log_level"))

    flag_file = load_flag_file(explicit["config"]) if explicit.get("config") else {}
    args = resolve_arguments(explicit, params, {**app_defaults(app_config), **flag_file})
    threads = _resolve_threads(args.pop("threads"), app_config.runtime.threads)
    args.pop("config")
    args.pop("log_level")
    logger.debug(f"Running '{command.name}' with {args} on {threads} threads")

    with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="qaoa-rl") as executor:
        ctx = CommandContext(
            command_name=command.name,
            output=output or RichOutputHandler(),
            app_config=app_config,
            parsed_args=args,
            threads=threads,
            executor=executor,
        )
        asyncio.run(command.handler(ctx))


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help", "help"):
        print_help(Console(), get_experiment_commands())
        return 0
    try:
        run_command(argv)
    except QaoaRlError as e:
        logger.debug("Command failed", exc_info=True)
        return _error_line(e, e.exit_code)
    except ValidationError as e:
        logger.debug("Validation failed", exc_info=True)
        return _error_line(e, 2)
    except KeyboardInterrupt:
        print("\nInterrupted.", file=sys.stderr)
        return 130
    return 0


if __name__ == "__main__":
    sys.exit(main())
