# qaoa_rl/backends/base.py
import logging
from abc import ABC, abstractmethod
from typing import Any, List, Tuple

import numpy as np

from qaoa_rl.types import ChainSpec, MeasurementRecord, Schedule

logger = logging.getLogger(__name__)


def assemble_record(zz: np.ndarray, x: np.ndarray, spec: ChainSpec) -> MeasurementRecord:
    """Build a record from per-bond <sz sz> and per-site <sx> values."""
    zz = np.asarray(zz, dtype=float)
    x = np.asarray(x, dtype=float)
    hz = -float(np.dot(spec.coupling_array(), zz))
    hx = -float(np.sum(x))
    return MeasurementRecord(zz=zz, x=x, hz=hz, hx=hx, energy=hz + spec.h_target * hx)


class SimulatorBackend(ABC):
    """Exact QAOA simulator bound to one chain instance.

    Backends keep only immutable precomputed data; simulator states are
    values passed in and returned, so one backend can serve many episodes
    on many threads at once.
    """

    name: str = "abstract"

    def __init__(self, spec: ChainSpec):
        self.spec = spec

    @abstractmethod
    def initial_state(self) -> Any:
        """The |+> state every episode starts from."""

    @abstractmethod
    def apply_layer(self, state: Any, gamma: float, beta: float) -> Any:
        """Apply exp(-i beta H_x) exp(-i gamma H_z) and return the new state."""

    @abstractmethod
    def measure(self, state: Any) -> MeasurementRecord:
        pass

    def run_schedule(self, sched: Schedule) -> Tuple[List[MeasurementRecord], float]:
        state = self.initial_state()
        records: List[MeasurementRecord] = []
        for gamma, beta in zip(sched.gammas, sched.betas):
            state = self.apply_layer(state, gamma, beta)
            records.append(self.measure(state))
        return records, records[-1].energy

    def final_energy(self, sched: Schedule) -> float:
        """E_P without intermediate measurements."""
        state = self.initial_state()
        for gamma, beta in zip(sched.gammas, sched.betas):
            state = self.apply_layer(state, gamma, beta)
        return self.measure(state).energy
