# qaoa_rl/commands/definition.py
from typing import Any, Awaitable, Callable, List, Optional

from pydantic import BaseModel, ConfigDict, Field

# Actual definition lives in qaoa_rl.commands.core.
CommandContext = Any


class ParameterDefinition(BaseModel):
    """A ``--name`` option of a command. Underscores in ``name`` are spelled as hyphens on the command line."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str = Field(..., description="The name of the parameter.")
    param_type: Any = Field(default=str, description="The Python type of the parameter, e.g. int or List[int].")
    description: Optional[str] = Field(None, description="A brief description of the parameter.")
    required: bool = Field(default=False, description="Whether the parameter must be supplied.")
    default: Optional[Any] = Field(None, description="The value used when the parameter is not provided.")

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


class CommandDefinition(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str = Field(..., description="The subcommand name (e.g. 'train').")
    handler: Callable[[CommandContext], Awaitable[Any]] = Field(
        ..., description="The asynchronous function to execute for this command."
    )
    description: Optional[str] = Field(None, description="What the command does.")
    parameters: List[ParameterDefinition] = Field(default_factory=list)
