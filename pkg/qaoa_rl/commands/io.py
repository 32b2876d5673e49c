# qaoa_rl/commands/io.py
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Sequence

from rich.console import Console
from rich.table import Table


class AbstractOutputHandler(ABC):
    """Where commands send human-facing output. Result files are written by the flows."""

    @abstractmethod
    async def send_message(self, message: Any, style: Optional[str] = None):
        """Sends a regular message to the output channel."""
        pass

    @abstractmethod
    async def send_error(self, message: Any, details: Optional[str] = None, style: str = "bold red"):
        """Sends an error message to the output channel."""
        pass

    @abstractmethod
    async def send_data(self, data: Any, format_hint: Optional[str] = None, style: Optional[str] = None):
        """
        Sends structured data to the output channel.
        ``format_hint="table"`` expects a list of flat dicts sharing the same keys.
        """
        pass


def _format_cell(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


class RichOutputHandler(AbstractOutputHandler):
    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console()

    async def send_message(self, message: Any, style: Optional[str] = None):
        self.console.print(message, style=style)

    async def send_error(self, message: Any, details: Optional[str] = None, style: str = "bold red"):
        self.console.print(f"Error: {message}", style=style)
        if details:
            self.console.print(details, style="red")

    async def send_data(self, data: Any, format_hint: Optional[str] = None, style: Optional[str] = None):
        if format_hint == "table" and isinstance(data, Sequence) and data and isinstance(data[0], dict):
            self.console.print(self._table(data), style=style)
        elif format_hint == "json":
            self.console.print_json(data=data)
        else:
            self.console.print(data, style=style)

    @staticmethod
    def _table(rows: List[Dict[str, Any]]) -> Table:
        table = Table(show_header=True, header_style="bold")
        columns = list(rows[0].keys())
        for column in columns:
            table.add_column(column, justify="right")
        for row in rows:
            table.add_row(*(_format_cell(row.get(c)) for c in columns))
        return table
