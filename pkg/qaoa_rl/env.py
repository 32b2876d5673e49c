# qaoa_rl/env.py
"""Episodic control interface: one episode is P QAOA layers chosen one at a time."""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from qaoa_rl.backends import SimulatorBackend, create_backend
from qaoa_rl.chain import classical_extremes, residual_energy_density
from qaoa_rl.errors import InvalidInputError
from qaoa_rl.types import (
    ACTION_HIGH,
    ACTION_LOW,
    Action,
    ChainSpec,
    EnergyExtremes,
    EpisodeConfig,
    MeasurementRecord,
    ObsMode,
    Observation,
    Schedule,
)

logger = logging.getLogger(__name__)

LOG_REWARD_FLOOR = 1e-12


def observation_size(n_sites: int, obs_mode: ObsMode, include_step: bool = False) -> int:
    base = 2 * n_sites if obs_mode == "local" else 2
    return base + int(include_step)


def observation_of(
    record: MeasurementRecord,
    spec: ChainSpec,
    obs_mode: ObsMode = "intensive",
    step_fraction: Optional[float] = None,
) -> Observation:
    total = spec.total_coupling
    if total <= 0.0:
        raise InvalidInputError("Observation undefined for a chain with zero total coupling")
    hz_density = record.hz / total
    hx_density = record.hx / spec.n_sites
    if obs_mode == "intensive":
        features = [hz_density, hx_density]
    elif obs_mode == "bare":
        features = [record.hz, record.hx]
    else:
        features = np.concatenate([record.zz, record.x]).tolist()
    if step_fraction is not None:
        features.append(step_fraction)
    return Observation(hz_density=hz_density, hx_density=hx_density, features=np.asarray(features, dtype=float))


def clip_action(action: Union[Action, Sequence[float], np.ndarray]) -> Tuple[Action, bool]:
    """Clip both angles into [0, pi/2]; the flag reports whether clipping fired."""
    if isinstance(action, Action):
        raw = (action.gamma, action.beta)
    else:
        raw = tuple(float(a) for a in np.asarray(action, dtype=float).reshape(-1))
    if len(raw) != 2 or not all(math.isfinite(a) for a in raw):
        raise InvalidInputError(f"An action is two finite angles, got {raw}")
    clipped = tuple(min(ACTION_HIGH, max(ACTION_LOW, a)) for a in raw)
    return Action(gamma=clipped[0], beta=clipped[1]), clipped != raw


class QaoaEnv:
    """Reset/step environment over one chain instance.

    Rewards are zero until the last layer; the terminal reward depends on
    ``reward_mode``: -E_P (raw), -eps (normalized) or -log10(eps + 1e-12) (log).
    """

    def __init__(self, spec: ChainSpec, cfg: EpisodeConfig, backend: Optional[SimulatorBackend] = None):
        if spec.total_coupling <= 0.0:
            raise InvalidInputError("Degenerate instance: all couplings are zero")
        self.spec = spec
        self.cfg = cfg
        self.backend = backend if backend is not None else create_backend(cfg.backend, spec)
        if self.backend.spec != spec:
            raise InvalidInputError("Backend was built for a different chain instance")
        self.extremes: Optional[EnergyExtremes] = (
            classical_extremes(spec) if cfg.reward_mode != "raw" or spec.h_target == 0.0 else None
        )
        self.t = 0
        self._state: Any = None
        self.last_record: Optional[MeasurementRecord] = None
        self.actions: List[Action] = []
        self.trace: List[Dict[str, Any]] = []

    @property
    def done(self) -> bool:
        return self._state is not None and self.t >= self.cfg.p_steps

    def _observe(self, record: MeasurementRecord) -> Observation:
        fraction = self.t / self.cfg.p_steps if self.cfg.include_step else None
        return observation_of(record, self.spec, self.cfg.obs_mode, fraction)

    def reset(self) -> Observation:
        self._state = self.backend.initial_state()
        self.t = 0
        self.actions = []
        self.trace = []
        self.last_record = self.backend.measure(self._state)
        return self._observe(self.last_record)

    def step(self, action: Union[Action, Sequence[float], np.ndarray]) -> Tuple[Observation, float, bool]:
        if self._state is None:
            raise InvalidInputError("step() called before reset()")
        if self.t >= self.cfg.p_steps:
            raise InvalidInputError(f"Episode already finished after {self.cfg.p_steps} steps; call reset()")
        applied, fired = clip_action(action)
        if fired:
            logger.debug(f"Action clipped at t={self.t + 1}: {action} -> ({applied.gamma:.6f}, {applied.beta:.6f})")
        self._state = self.backend.apply_layer(self._state, applied.gamma, applied.beta)
        self.t += 1
        self.actions.append(applied)
        self.last_record = self.backend.measure(self._state)
        obs = self._observe(self.last_record)
        done = self.t == self.cfg.p_steps
        reward = self.terminal_reward(self.last_record.energy) if done else 0.0
        self.trace.append(
            {
                "t": self.t,
                "gamma": applied.gamma,
                "beta": applied.beta,
                "obs": [obs.hz_density, obs.hx_density],
                "reward": reward,
            }
        )
        return obs, reward, done

    def terminal_reward(self, e_p: float) -> float:
        if self.cfg.reward_mode == "raw":
            return -e_p
        eps = residual_energy_density(e_p, self.extremes)
        if self.cfg.reward_mode == "normalized":
            return -eps
        return -math.log10(eps + LOG_REWARD_FLOOR)

    def schedule(self) -> Schedule:
        """Angles actually applied so far, after clipping."""
        return Schedule(gammas=tuple(a.gamma for a in self.actions), betas=tuple(a.beta for a in self.actions))


def write_trace(trace: List[Dict[str, Any]], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for row in trace:
            fh.write(json.dumps(row) + "\n")
    return path
