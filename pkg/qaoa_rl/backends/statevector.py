# qaoa_rl/backends/statevector.py
"""Dense 2^N-amplitude reference simulator.

Basis index c encodes the z-configuration bitwise: bit j of c is spin j,
with 0 meaning up (sigma = +1).
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from qaoa_rl.backends.base import SimulatorBackend, assemble_record
from qaoa_rl.errors import InvalidInputError
from qaoa_rl.types import ChainSpec, MeasurementRecord, Schedule

logger = logging.getLogger(__name__)

MAX_ORACLE_SITES = 20


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray
    n_sites: int

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


def _check_size(n: int) -> None:
    if n < 1 or n > MAX_ORACLE_SITES:
        raise InvalidInputError(f"Statevector oracle supports 1 <= N <= {MAX_ORACLE_SITES}, got N={n}")


def _check_match(state: StateVector, spec: ChainSpec) -> None:
    if state.n_sites != spec.n_sites or state.amplitudes.size != 1 << spec.n_sites:
        raise InvalidInputError(
            f"State of {state.n_sites} sites does not match chain with N={spec.n_sites}"
        )


@lru_cache(maxsize=None)
def spin_table(n: int) -> np.ndarray:
    """sigma_j(c) for every site j and basis index c, shape (n, 2^n)."""
    c = np.arange(1 << n, dtype=np.int64)
    bits = (c[None, :] >> np.arange(n, dtype=np.int64)[:, None]) & 1
    return (1 - 2 * bits).astype(np.int8)


@lru_cache(maxsize=64)
def bond_products(n: int) -> np.ndarray:
    """sigma_j sigma_{j+1} for every bond (periodic), shape (n, 2^n)."""
    s = spin_table(n)
    return (s * np.roll(s, -1, axis=0)).astype(np.int8)


@lru_cache(maxsize=64)
def z_energies(couplings: Tuple[float, ...]) -> np.ndarray:
    """Diagonal of H_z = -sum_j J_j sz_j sz_{j+1} in the computational basis."""
    n = len(couplings)
    return -np.asarray(couplings, dtype=float) @ bond_products(n)


def prepare_plus(n: int) -> StateVector:
    _check_size(n)
    dim = 1 << n
    return StateVector(amplitudes=np.full(dim, dim ** -0.5, dtype=complex), n_sites=n)


def basis_state(n: int, index: int) -> StateVector:
    _check_size(n)
    amplitudes = np.zeros(1 << n, dtype=complex)
    amplitudes[index] = 1.0
    return StateVector(amplitudes=amplitudes, n_sites=n)


def apply_uz(state: StateVector, spec: ChainSpec, gamma: float) -> StateVector:
    _check_match(state, spec)
    phases = np.exp(-1j * gamma * z_energies(tuple(spec.couplings)))
    return StateVector(amplitudes=state.amplitudes * phases, n_sites=state.n_sites)


def apply_ux(state: StateVector, beta: float) -> StateVector:
    """Apply prod_j exp(+i beta sx_j), i.e. exp(-i beta H_x) with H_x = -sum_j sx_j."""
    n = state.n_sites
    c, s = np.cos(beta), 1j * np.sin(beta)
    psi = state.amplitudes.copy()
    for j in range(n):
        view = psi.reshape(1 << (n - 1 - j), 2, 1 << j)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] = c * a0 + s * a1
        view[:, 1, :] = s * a0 + c * a1
    return StateVector(amplitudes=psi, n_sites=n)


def site_x_expectations(state: StateVector) -> np.ndarray:
    n = state.n_sites
    psi = state.amplitudes
    x = np.empty(n)
    for j in range(n):
        view = psi.reshape(1 << (n - 1 - j), 2, 1 << j)
        x[j] = 2.0 * np.vdot(view[:, 0, :], view[:, 1, :]).real
    return x


def measure_bonds(state: StateVector, spec: ChainSpec) -> MeasurementRecord:
    _check_match(state, spec)
    probs = np.abs(state.amplitudes) ** 2
    zz = bond_products(spec.n_sites) @ probs
    return assemble_record(zz, site_x_expectations(state), spec)


def run_schedule(spec: ChainSpec, sched: Schedule) -> Tuple[List[MeasurementRecord], float]:
    return StatevectorBackend(spec).run_schedule(sched)


class StatevectorBackend(SimulatorBackend):
    name = "oracle"

    def __init__(self, spec: ChainSpec):
        _check_size(spec.n_sites)
        super().__init__(spec)

    def initial_state(self) -> StateVector:
        return prepare_plus(self.spec.n_sites)

    def apply_layer(self, state: StateVector, gamma: float, beta: float) -> StateVector:
        return apply_ux(apply_uz(state, self.spec, gamma), beta)

    def measure(self, state: StateVector) -> MeasurementRecord:
        return measure_bonds(state, self.spec)
