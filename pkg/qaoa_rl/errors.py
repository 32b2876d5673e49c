# qaoa_rl/errors.py
"""Exception hierarchy shared by every layer of the workbench.

The command line maps these onto process exit codes:
``InvalidInputError`` -> 2, ``NumericalError`` -> 3.
"""


class QaoaRlError(Exception):
    """Base class for all workbench errors."""

    exit_code: int = 1


class InvalidInputError(QaoaRlError, ValueError):
    """An instance, schedule, configuration or file failed validation."""

    exit_code = 2


class CheckpointError(InvalidInputError):
    """A policy checkpoint is malformed or incompatible with the requested use."""


class ArgumentParsingError(InvalidInputError):
    """Command-line arguments could not be parsed against a command definition."""


class NumericalError(QaoaRlError, ArithmeticError):
    """A simulation or optimisation produced a non-finite or unphysical value."""

    exit_code = 3
