# qaoa_rl/backends/__init__.py
import logging
from typing import Dict, List, Type

from qaoa_rl.backends.base import SimulatorBackend, assemble_record
from qaoa_rl.backends.fermion import FermionBackend, MomentumBackend
from qaoa_rl.backends.statevector import MAX_ORACLE_SITES, StatevectorBackend
from qaoa_rl.errors import InvalidInputError
from qaoa_rl.types import ChainSpec

logger = logging.getLogger(__name__)

AUTO_ORACLE_MAX_SITES = 14


class BackendRegistry:
    """Maps backend names to simulator classes."""

    def __init__(self):
        self._backends: Dict[str, Type[SimulatorBackend]] = {}

    def register(self, backend_cls: Type[SimulatorBackend], allow_override: bool = False) -> None:
        if not allow_override and backend_cls.name in self._backends:
            logger.warning(f"Backend '{backend_cls.name}' already registered. Skipping duplicate registration.")
            return
        self._backends[backend_cls.name] = backend_cls

    def get(self, name: str) -> Type[SimulatorBackend]:
        try:
            return self._backends[name]
        except KeyError:
            raise InvalidInputError(f"Unknown backend '{name}'. Available: {', '.join(self.list_names())}") from None

    def list_names(self) -> List[str]:
        return sorted(self._backends)


global_backend_registry = BackendRegistry()
for _cls in (StatevectorBackend, FermionBackend, MomentumBackend):
    global_backend_registry.register(_cls)


def resolve_backend_name(name: str, spec: ChainSpec, oracle_max_sites: int = AUTO_ORACLE_MAX_SITES) -> str:
    """Turn 'auto' into a concrete backend and reject impossible pairings."""
    if name == "auto":
        if spec.n_sites <= oracle_max_sites:
            return "oracle"
        return "momentum" if spec.is_uniform else "fermion"
    if name == "oracle" and spec.n_sites > MAX_ORACLE_SITES:
        raise InvalidInputError(
            f"Backend 'oracle' is limited to N <= {MAX_ORACLE_SITES}; use 'fermion' for N={spec.n_sites}"
        )
    if name == "momentum" and not spec.is_uniform:
        raise InvalidInputError("Backend 'momentum' requires a uniform chain")
    global_backend_registry.get(name)
    return name


def create_backend(name: str, spec: ChainSpec) -> SimulatorBackend:
    resolved = resolve_backend_name(name, spec)
    logger.debug(f"Using backend '{resolved}' for N={spec.n_sites}")
    return global_backend_registry.get(resolved)(spec)


__all__ = [
    "BackendRegistry",
    "SimulatorBackend",
    "StatevectorBackend",
    "FermionBackend",
    "MomentumBackend",
    "assemble_record",
    "create_backend",
    "global_backend_registry",
    "resolve_backend_name",
]
