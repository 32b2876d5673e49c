# qaoa_rl/types.py
import math
from dataclasses import dataclass
from datetime import datetime
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

BackendChoice = Literal["auto", "oracle", "fermion", "momentum"]
RewardMode = Literal["raw", "normalized", "log"]
ObsMode = Literal["intensive", "bare", "local"]

ACTION_LOW = 0.0
ACTION_HIGH = math.pi / 2


class ConfiguredBaseModel(BaseModel):
    """Immutable record that rejects unknown keys and non-finite floats."""

    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)


class ChainSpec(ConfiguredBaseModel):
    """A periodic Ising ring: bond j couples sites j and j+1 (site N+1 is site 1)."""

    n_sites: int = Field(..., description="Number of spins N (even, at least 4).")
    couplings: Tuple[float, ...] = Field(..., description="Bond couplings J_j in [0, 1].")
    h_target: float = Field(default=0.0, ge=0.0, description="Transverse field of the target Hamiltonian.")
    boundary: Literal["periodic"] = "periodic"
    seed: Optional[int] = Field(default=None, description="Generator seed for disordered instances.")

    @model_validator(mode="after")
    def _check_ring(self) -> "ChainSpec":
        if self.n_sites < 4 or self.n_sites % 2:
            raise ValueError(f"n_sites must be even and >= 4, got {self.n_sites}")
        if len(self.couplings) != self.n_sites:
            raise ValueError(f"expected {self.n_sites} couplings, got {len(self.couplings)}")
        bad = [j for j in self.couplings if not 0.0 <= j <= 1.0]
        if bad:
            raise ValueError(f"couplings must lie in [0, 1], got {bad[:3]}")
        return self

    @property
    def total_coupling(self) -> float:
        return float(sum(self.couplings))

    @property
    def is_uniform(self) -> bool:
        return all(j == self.couplings[0] for j in self.couplings)

    def coupling_array(self) -> np.ndarray:
        return np.asarray(self.couplings, dtype=float)


class Schedule(ConfiguredBaseModel):
    """The 2P QAOA angles, applied as (gamma_t, beta_t) for t = 1..P."""

    gammas: Tuple[float, ...]
    betas: Tuple[float, ...]

    @model_validator(mode="after")
    def _check_lengths(self) -> "Schedule":
        if len(self.gammas) < 1:
            raise ValueError("a schedule needs at least one layer")
        if len(self.gammas) != len(self.betas):
            raise ValueError(f"gammas ({len(self.gammas)}) and betas ({len(self.betas)}) differ in length")
        return self

    @property
    def p(self) -> int:
        return len(self.gammas)

    def as_vector(self) -> np.ndarray:
        """Flat parameter vector (gamma_1..gamma_P, beta_1..beta_P)."""
        return np.concatenate([np.asarray(self.gammas, float), np.asarray(self.betas, float)])

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "Schedule":
        x = np.asarray(x, dtype=float)
        p = x.size // 2
        return cls(gammas=tuple(x[:p].tolist()), betas=tuple(x[p:].tolist()))

    @classmethod
    def zeros(cls, p: int) -> "Schedule":
        return cls(gammas=(0.0,) * p, betas=(0.0,) * p)


class EnergyExtremes(ConfiguredBaseModel):
    e_min: float
    e_max: float


@dataclass(frozen=True)
class MeasurementRecord:
    """Expectation values after one QAOA step; identical shape for every backend."""

    zz: np.ndarray  # <sz_j sz_{j+1}>, bond N wraps to site 1
    x: np.ndarray  # <sx_j>
    hz: float
    hx: float
    energy: float

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.zz, self.x, [self.hz, self.hx, self.energy]])


@dataclass(frozen=True)
class Observation:
    """What the agent sees after a step.

    ``hz_density`` and ``hx_density`` are always the intensive values
    <H_z>/sum(J) and <H_x>/N; ``features`` is the network input for the
    configured observation mode.
    """

    hz_density: float
    hx_density: float
    features: np.ndarray


@dataclass(frozen=True)
class Action:
    gamma: float
    beta: float


class EpisodeConfig(ConfiguredBaseModel):
    p_steps: int = Field(..., ge=1)
    backend: BackendChoice = "auto"
    reward_mode: RewardMode = "raw"
    obs_mode: ObsMode = "intensive"
    include_step: bool = False


class TrainConfig(ConfiguredBaseModel):
    """PPO hyperparameters plus the episode settings they are collected under."""

    p_steps: int = Field(..., ge=1)
    n_epochs: int = Field(default=1024, gt=0)
    n_episodes_per_epoch: int = Field(default=100, gt=0)
    discount: float = Field(default=1.0, gt=0.0, le=1.0)
    gae_lambda: float = Field(default=0.97, gt=0.0, le=1.0)
    clip_ratio: float = Field(default=0.2, gt=0.0, lt=1.0)
    policy_lr: float = Field(default=3e-4, ge=0.0)
    value_lr: float = Field(default=1e-3, ge=0.0)
    policy_iters: int = Field(default=80, gt=0)
    value_iters: int = Field(default=80, gt=0)
    kl_stop: float = Field(default=0.015, gt=0.0)
    master_seed: int = Field(default=0, ge=0)
    hidden_sizes: Tuple[int, ...] = (32, 16)
    init_log_std: float = -0.5
    backend: BackendChoice = "auto"
    reward_mode: RewardMode = "raw"
    obs_mode: ObsMode = "intensive"
    include_step: bool = False
    checkpoint_every: int = Field(default=128, ge=0)

    def episode_config(self) -> EpisodeConfig:
        return EpisodeConfig(
            p_steps=self.p_steps,
            backend=self.backend,
            reward_mode=self.reward_mode,
            obs_mode=self.obs_mode,
            include_step=self.include_step,
        )


class ResultRecord(ConfiguredBaseModel):
    """One evaluated episode of a trained policy."""

    run_id: int
    p: int
    n: int
    seed: int
    schedule: Schedule
    e_p: float
    eps: float
    s_t: Tuple[Optional[float], ...]
    reward: float
    eps_refined: Optional[float] = None
    refined_schedule: Optional[Schedule] = None
    schedule_path: Optional[str] = None


class OptimizeReport(ConfiguredBaseModel):
    p: int
    initial: Schedule
    final: Schedule
    eps_init: float
    eps_final: float
    e_final: float
    iters: int
    gnorm: float
    converged: bool


class LayerWeights(BaseModel):
    model_config = ConfigDict(extra="forbid")

    w: List[List[float]]
    b: List[float]


class PolicyCheckpoint(BaseModel):
    """Serialized policy and value heads; the transferable artifact."""

    model_config = ConfigDict(extra="forbid")

    arch: List[int]
    weights: List[LayerWeights]
    log_std: List[float]
    value_arch: List[int]
    value_weights: List[LayerWeights]
    obs_mode: ObsMode
    action_bounds: List[float] = Field(default_factory=lambda: [ACTION_LOW, ACTION_HIGH])
    meta: Dict[str, Any] = Field(default_factory=dict)


class RunManifest(BaseModel):
    run_id: str
    command: str
    config: Dict[str, Any]
    master_seed: Optional[int] = None
    instances: List[str] = Field(default_factory=list)
    outputs: List[str] = Field(default_factory=list)
    code_version: str
    started_at: datetime
    finished_at: Optional[datetime] = None
