# qaoa_rl/commands/parser.py
from typing import Any, Dict, List, Mapping, Optional, Sequence, Type, Union, get_args, get_origin

from qaoa_rl.commands.definition import ParameterDefinition
from qaoa_rl.errors import ArgumentParsingError


def _by_flag(param_definitions: Sequence[ParameterDefinition]) -> Dict[str, ParameterDefinition]:
    return {p.flag: p for p in param_definitions}


def parse_tokens(tokens: Sequence[str], param_definitions: Sequence[ParameterDefinition]) -> Dict[str, Any]:
    """
    Parses the explicitly given options only; defaults are applied by resolve_arguments.

    Supports ``--name value``, ``--name=value``, boolean ``--flag`` / ``--no-flag``
    and comma-separated lists for ``List[T]`` parameters.

    Raises:
        ArgumentParsingError: unknown option, missing value, or a value of the wrong type.
    """
    flags = _by_flag(param_definitions)
    parsed: Dict[str, Any] = {}
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if not token.startswith("--"):
            raise ArgumentParsingError(f"Unexpected argument '{token}'; options are spelled --name value")
        inline_value: Optional[str] = None
        name = token
        if "=" in token:
            name, inline_value = token.split("=", 1)

        if name.startswith("--no-") and name not in flags:
            param_def = flags.get("--" + name[len("--no-"):])
            if param_def is None or param_def.param_type is not bool:
                raise ArgumentParsingError(f"Unknown option '{name}'")
            parsed[param_def.name] = False
            i += 1
            continue

        param_def = flags.get(name)
        if param_def is None:
            raise ArgumentParsingError(f"Unknown option '{name}'")

        if param_def.param_type is bool and inline_value is None:
            parsed[param_def.name] = True
            i += 1
            continue

        if inline_value is None:
            if i + 1 >= len(tokens):
                raise ArgumentParsingError(f"Option '{name}' expects a value")
            inline_value = tokens[i + 1]
            i += 2
        else:
            i += 1
        parsed[param_def.name] = _cast_value(inline_value, param_def.param_type, param_def.name)
    return parsed


def resolve_arguments(
    explicit: Mapping[str, Any],
    param_definitions: Sequence[ParameterDefinition],
    fallback: Optional[Mapping[str, Any]] = None,
) -> Dict[str, Any]:
    """Explicit values win over ``fallback`` (config file), which wins over declared defaults."""
    fallback = fallback or {}
    resolved: Dict[str, Any] = {}
    for param_def in param_definitions:
        if param_def.name in explicit:
            resolved[param_def.name] = explicit[param_def.name]
        elif param_def.name in fallback:
            value = fallback[param_def.name]
            resolved[param_def.name] = (
                _cast_value(value, param_def.param_type, param_def.name) if isinstance(value, str) else value
            )
        elif param_def.required:
            raise ArgumentParsingError(f"Missing required argument: '{param_def.flag}'")
        elif param_def.param_type is bool:
            resolved[param_def.name] = bool(param_def.default)
        else:
            resolved[param_def.name] = param_def.default
    return resolved


def parse_arguments(
    tokens: Sequence[str],
    param_definitions: Sequence[ParameterDefinition],
    fallback: Optional[Mapping[str, Any]] = None,
) -> Dict[str, Any]:
    return resolve_arguments(parse_tokens(tokens, param_definitions), param_definitions, fallback)


def _cast_value(value_str: str, target_type: Type, param_name: str) -> Any:
    """Casts a string value to the target type."""
    origin_type = get_origin(target_type)

    if origin_type is Union:
        args = get_args(target_type)
        if value_str.lower() in ("none", "null", "") and type(None) in args:
            return None
        for t_arg in (t for t in args if t is not type(None)):
            try:
                return _cast_value(value_str, t_arg, param_name)
            except ArgumentParsingError:
                continue
        raise ArgumentParsingError(f"Argument '{param_name}': Value '{value_str}' does not match {target_type}")

    if origin_type in (list, List):
        item_type = get_args(target_type)[0] if get_args(target_type) else str
        items = [part.strip() for part in value_str.split(",") if part.strip()]
        if not items:
            raise ArgumentParsingError(f"Argument '{param_name}': expected a comma-separated list, got '{value_str}'")
        return [_cast_value(item, item_type, param_name) for item in items]

    if target_type is bool:
        low_val = value_str.lower()
        if low_val in ["true", "yes", "1", "on"]:
            return True
        elif low_val in ["false", "no", "0", "off"]:
            return False
        raise ArgumentParsingError(f"Argument '{param_name}': Cannot cast '{value_str}' to boolean.")
    if target_type is int:
        try:
            return int(value_str)
        except ValueError:
            raise ArgumentParsingError(f"Argument '{param_name}': Cannot cast '{value_str}' to integer.") from None
    if target_type is float:
        try:
            return float(value_str)
        except ValueError:
            raise ArgumentParsingError(f"Argument '{param_name}': Cannot cast '{value_str}' to float.") from None
    if target_type is str:
        return value_str

    try:
        return target_type(value_str)
    except Exception as e:
        raise ArgumentParsingError(f"Argument '{param_name}': Error casting '{value_str}' to {target_type}: {e}") from e
