# qaoa_rl/chain.py
"""Problem instances, classical extremes and the metrics every experiment reports."""
import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from qaoa_rl.errors import InvalidInputError, NumericalError
from qaoa_rl.types import ChainSpec, EnergyExtremes, Schedule

logger = logging.getLogger(__name__)

ENERGY_SLACK = 1e-9


class InstanceFile(BaseModel):
    """On-disk layout of an instance: exactly these four keys."""

    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    n: int
    h: float
    seed: Optional[int]
    couplings: List[float]


def _build_spec(n: int, couplings, h: float, seed: Optional[int]) -> ChainSpec:
    try:
        return ChainSpec(n_sites=n, couplings=tuple(float(j) for j in couplings), h_target=h, seed=seed)
    except ValidationError as e:
        raise InvalidInputError(f"Invalid chain instance: {e.errors()[0]['msg']}") from e


def make_uniform(n: int, j: float, h: float = 0.0) -> ChainSpec:
    return _build_spec(n, [j] * max(n, 0), h, None)


def make_disordered(n: int, h: float, seed: int) -> ChainSpec:
    """Couplings drawn i.i.d. uniform on [0, 1]; (n, seed) fixes the instance."""
    if n < 4 or n % 2:
        raise InvalidInputError(f"n must be even and >= 4, got {n}")
    rng = np.random.default_rng(seed)
    return _build_spec(n, rng.uniform(0.0, 1.0, size=n).tolist(), h, seed)


def classical_extremes(spec: ChainSpec) -> EnergyExtremes:
    if spec.h_target != 0.0:
        raise InvalidInputError(f"Only h_target = 0 targets are supported, got h = {spec.h_target}")
    total = spec.total_coupling
    return EnergyExtremes(e_min=-total, e_max=total)


def residual_energy_density(e_p: float, extremes: EnergyExtremes) -> float:
    span = extremes.e_max - extremes.e_min
    if not span > 0.0:
        raise InvalidInputError("Degenerate instance: e_max equals e_min")
    if not np.isfinite(e_p):
        raise NumericalError(f"Non-finite energy {e_p}")
    if e_p < extremes.e_min - ENERGY_SLACK or e_p > extremes.e_max + ENERGY_SLACK:
        raise NumericalError(
            f"Energy {e_p!r} outside [{extremes.e_min}, {extremes.e_max}]; simulator output is unphysical"
        )
    return float(min(1.0, max(0.0, (e_p - extremes.e_min) / span)))


def qaoa_bound(p: int, n: int) -> float:
    """Lower bound on the residual energy density of a depth-p circuit on an n-ring."""
    if p < 1 or n < 4:
        raise InvalidInputError(f"qaoa_bound needs p >= 1 and n >= 4, got p={p}, n={n}")
    return 1.0 / (2 * p + 2) if 2 * p < n else 0.0


def schedule_to_s(sched: Schedule, strict: bool = True) -> List[Optional[float]]:
    """s_t = gamma_t / (gamma_t + beta_t); with ``strict=False`` an all-zero layer gives None."""
    gammas = np.asarray(sched.gammas, dtype=float)
    denom = gammas + np.asarray(sched.betas, dtype=float)
    zero = denom == 0.0
    if strict and np.any(zero):
        raise InvalidInputError("schedule_to_s: gamma_t + beta_t is zero for some layer")
    s = gammas / np.where(zero, 1.0, denom)
    return [None if z else float(v) for v, z in zip(s, zero)]


def save_instance(spec: ChainSpec, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    record = InstanceFile(n=spec.n_sites, h=spec.h_target, seed=spec.seed, couplings=list(spec.couplings))
    path.write_text(record.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.debug(f"Instance with N={spec.n_sites} written to {path}")
    return path


def load_instance(path: Union[str, Path]) -> ChainSpec:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InvalidInputError(f"Cannot read instance file {path}: {e}") from e
    try:
        record = InstanceFile.model_validate_json(raw)
    except ValidationError as e:
        raise InvalidInputError(f"Malformed instance file {path}: {e}") from e
    return _build_spec(record.n, record.couplings, record.h, record.seed)
