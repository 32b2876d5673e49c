# qaoa_rl/config_loader.py
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from qaoa_rl.errors import InvalidInputError
from qaoa_rl.types import BackendChoice, ObsMode, RewardMode

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = "qaoa_rl.conf.yaml"
THREADS_ENV_VAR = "QAOA_RL_THREADS"


class LoggingConfig(BaseModel):
    level: str = "INFO"
    file_path: Optional[str] = None
    file_mode: str = "a"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    levels: Optional[Dict[str, str]] = None


class RuntimeConfig(BaseModel):
    threads: Optional[int] = Field(default=None, ge=1)
    default_backend: BackendChoice = "auto"
    oracle_max_sites: int = Field(default=14, ge=1, le=20)


class TrainingDefaults(BaseModel):
    epochs: int = Field(default=1024, gt=0)
    episodes: int = Field(default=100, gt=0)
    hidden_sizes: Tuple[int, ...] = (32, 16)
    reward_mode: RewardMode = "raw"
    obs_mode: ObsMode = "intensive"
    include_step: bool = False
    checkpoint_every: int = Field(default=128, ge=0)


class EvaluationDefaults(BaseModel):
    runs: int = Field(default=50, gt=0)
    deterministic: bool = False


class OptimizerDefaults(BaseModel):
    fd_step: float = Field(default=1e-5, gt=0.0)
    gtol: float = Field(default=1e-8, gt=0.0)
    maxiter: int = Field(default=500, gt=0)
    grid_points: int = Field(default=64, ge=2)


class AppConfig(BaseModel):
    model_config = ConfigDict(extra="ignore")

    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    runtime: RuntimeConfig = Field(default_factory=RuntimeConfig)
    training: TrainingDefaults = Field(default_factory=TrainingDefaults)
    evaluation: EvaluationDefaults = Field(default_factory=EvaluationDefaults)
    optimizer: OptimizerDefaults = Field(default_factory=OptimizerDefaults)


def _read_yaml_mapping(path: Path) -> Dict[str, Any]:
    try:
        with path.open("r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise InvalidInputError(f"Cannot read configuration file {path}: {e}") from e
    except yaml.YAMLError as e:
        raise InvalidInputError(f"Configuration file {path} is not valid YAML/JSON: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InvalidInputError(f"Configuration file {path} did not load as a mapping")
    return data


def load_app_config(config_path: Union[str, Path, None] = DEFAULT_CONFIG_PATH) -> AppConfig:
    """Load the application config; a missing default file yields built-in defaults."""
    if config_path is None:
        return AppConfig()
    path = Path(config_path)
    if not path.exists():
        if str(config_path) != DEFAULT_CONFIG_PATH:
            raise InvalidInputError(f"Configuration file {path} not found")
        logger.debug(f"No {DEFAULT_CONFIG_PATH} in {os.getcwd()}; using built-in defaults")
        return AppConfig()
    try:
        return AppConfig(**_read_yaml_mapping(path))
    except ValidationError as e:
        raise InvalidInputError(f"Invalid configuration in {path}: {e}") from e


def load_flag_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Flag values from a JSON or YAML mapping, keys normalized to parameter names."""
    raw = _read_yaml_mapping(Path(path))
    return {str(k).lstrip("-").replace("-", "_"): v for k, v in raw.items()}


def threads_from_env() -> Optional[int]:
    value = os.environ.get(THREADS_ENV_VAR)
    if value is None or value.strip() == "":
        return None
    try:
        threads = int(value)
    except ValueError:
        raise InvalidInputError(f"{THREADS_ENV_VAR} must be an integer, got '{value}'") from None
    if threads < 1:
        raise InvalidInputError(f"{THREADS_ENV_VAR} must be >= 1, got {threads}")
    return threads
