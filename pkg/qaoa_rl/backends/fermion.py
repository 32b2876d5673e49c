# qaoa_rl/backends/fermion.py
"""Free-fermion simulator for the periodic Ising ring.

Jordan-Wigner convention: sx_j = 1 - 2 n_j and
sz_j = (c_j + c_j^dag) prod_{l<j} (1 - 2 n_l), so |+> is the fermion vacuum.
Both QAOA unitaries conserve fermion parity and |+> is even, so the ring is
simulated in the even sector where c_{N+1} = -c_1 (antiperiodic).

Quadratic Hamiltonians are stored as
H = sum_ij a_ij c_i^dag c_j + 1/2 sum_ij (b_ij c_i^dag c_j^dag + h.c.) + constant.
A Gaussian state is the Bogoliubov frame [u; v] whose columns define the
annihilators gamma_k = sum_i (conj(u_ik) c_i + conj(v_ik) c_i^dag) of the state.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from qaoa_rl.backends.base import SimulatorBackend, assemble_record
from qaoa_rl.errors import InvalidInputError, NumericalError
from qaoa_rl.types import ChainSpec, MeasurementRecord, Schedule

logger = logging.getLogger(__name__)

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class QuadraticHamiltonian:
    a: np.ndarray
    b: np.ndarray
    constant: float = 0.0

    def __post_init__(self):
        if self.a.shape != self.b.shape or self.a.shape[0] != self.a.shape[1]:
            raise InvalidInputError(f"Hopping {self.a.shape} and pairing {self.b.shape} must be equal square matrices")
        if np.max(np.abs(self.a - self.a.conj().T), initial=0.0) > HERMITICITY_TOL:
            raise InvalidInputError("Hopping matrix a must be Hermitian")
        if np.max(np.abs(self.b + self.b.T), initial=0.0) > HERMITICITY_TOL:
            raise InvalidInputError("Pairing matrix b must be antisymmetric")

    @property
    def n_modes(self) -> int:
        return self.a.shape[0]

    def bdg_matrix(self) -> np.ndarray:
        """The 2N x 2N matrix [[a, b], [-conj(b), -conj(a)]]."""
        return np.block([[self.a, self.b], [-self.b.conj(), -self.a.conj()]])


@dataclass(frozen=True)
class BdgEigensystem:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def propagator(self, theta: float) -> np.ndarray:
        q = self.eigenvectors
        return (q * np.exp(-1j * theta * self.eigenvalues)) @ q.conj().T


@dataclass(frozen=True)
class GaussianState:
    u: np.ndarray
    v: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.u.shape[0]

    def isometry_error(self) -> float:
        gram = self.u.conj().T @ self.u + self.v.conj().T @ self.v
        return float(np.max(np.abs(gram - np.eye(self.n_modes))))


def bond_signs(n: int) -> np.ndarray:
    """+1 on bulk bonds, -1 on the wrapping bond (N, 1)."""
    signs = np.ones(n)
    signs[-1] = -1.0
    return signs


def build_quadratic(spec: ChainSpec) -> Tuple[QuadraticHamiltonian, QuadraticHamiltonian]:
    n = spec.n_sites
    couplings = spec.coupling_array() * bond_signs(n)
    a = np.zeros((n, n))
    b = np.zeros((n, n))
    for j in range(n):
        k = (j + 1) % n
        a[j, k] -= couplings[j]
        a[k, j] -= couplings[j]
        b[j, k] -= couplings[j]
        b[k, j] += couplings[j]
    hz = QuadraticHamiltonian(a=a, b=b, constant=0.0)
    hx = QuadraticHamiltonian(a=2.0 * np.eye(n), b=np.zeros((n, n)), constant=-float(n))
    return hz, hx


def bdg_eigensystem(h: QuadraticHamiltonian) -> BdgEigensystem:
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(h.bdg_matrix())
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"BdG diagonalization failed: {e}") from e
    return BdgEigensystem(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


@lru_cache(maxsize=16)
def cached_eigensystems(spec: ChainSpec) -> Tuple[BdgEigensystem, BdgEigensystem]:
    """(hz, hx) eigensystems, computed once per instance."""
    hz, hx = build_quadratic(spec)
    logger.debug(f"Diagonalizing BdG matrices for N={spec.n_sites}")
    return bdg_eigensystem(hz), bdg_eigensystem(hx)


def init_vacuum(n: int) -> GaussianState:
    return GaussianState(u=np.eye(n, dtype=complex), v=np.zeros((n, n), dtype=complex))


def evolve(state: GaussianState, eig: BdgEigensystem, theta: float) -> GaussianState:
    """Apply exp(-i theta H) to the state: the frame [u; v] picks up exp(-i theta H_BdG)."""
    n = state.n_modes
    q = eig.eigenvectors
    frame = np.vstack([state.u, state.v])
    frame = q @ (np.exp(-1j * theta * eig.eigenvalues)[:, None] * (q.conj().T @ frame))
    return GaussianState(u=frame[:n], v=frame[n:])


def correlators(state: GaussianState) -> Tuple[np.ndarray, np.ndarray]:
    """g_ij = <c_i^dag c_j> and f_ij = <c_i c_j>."""
    vh = state.v.conj().T
    return state.v @ vh, state.u @ vh


def measure(state: GaussianState, spec: ChainSpec) -> MeasurementRecord:
    n = spec.n_sites
    if state.n_modes != n:
        raise InvalidInputError(f"Gaussian state has {state.n_modes} modes, chain has N={n}")
    g, f = correlators(state)
    sites = np.arange(n)
    nxt = (sites + 1) % n
    zz = 2.0 * bond_signs(n) * (g[sites, nxt].real + f[nxt, sites].real)
    x = 1.0 - 2.0 * np.diag(g).real
    return assemble_record(zz, x, spec)


def run_schedule_fermion(spec: ChainSpec, sched: Schedule) -> Tuple[List[MeasurementRecord], float]:
    return FermionBackend(spec).run_schedule(sched)


class FermionBackend(SimulatorBackend):
    name = "fermion"

    def __init__(self, spec: ChainSpec):
        super().__init__(spec)
        self.hz_eig, self.hx_eig = cached_eigensystems(spec)

    def initial_state(self) -> GaussianState:
        return init_vacuum(self.spec.n_sites)

    def apply_layer(self, state: GaussianState, gamma: float, beta: float) -> GaussianState:
        return evolve(evolve(state, self.hz_eig, gamma), self.hx_eig, beta)

    def measure(self, state: GaussianState) -> MeasurementRecord:
        return measure(state, self.spec)


def momentum_grid(n: int) -> np.ndarray:
    """Positive antiperiodic momenta k = (2m - 1) pi / N, m = 1..N/2."""
    return (2.0 * np.arange(1, n // 2 + 1) - 1.0) * np.pi / n


class MomentumBackend(SimulatorBackend):
    """Uniform-ring fast path: N/2 independent pair modes (k, -k).

    Each pair lives in span{|0>, c_k^dag c_-k^dag |0>}; the state is an
    (N/2, 2) array of amplitudes and every gate is a 2x2 rotation.
    """

    name = "momentum"

    def __init__(self, spec: ChainSpec):
        if not spec.is_uniform:
            raise InvalidInputError("Momentum backend requires equal couplings on every bond")
        super().__init__(spec)
        self.coupling = spec.couplings[0]
        self.k = momentum_grid(spec.n_sites)
        self.cos_k = np.cos(self.k)
        self.sin_k = np.sin(self.k)

    def initial_state(self) -> np.ndarray:
        state = np.zeros((self.k.size, 2), dtype=complex)
        state[:, 0] = 1.0
        return state

    def apply_layer(self, state: np.ndarray, gamma: float, beta: float) -> np.ndarray:
        alpha, pair = state[:, 0], state[:, 1]
        c = np.cos(2.0 * self.coupling * gamma)
        s = np.sin(2.0 * self.coupling * gamma)
        alpha_z = c * alpha - 1j * s * self.cos_k * alpha + s * self.sin_k * pair
        pair_z = c * pair - s * self.sin_k * alpha + 1j * s * self.cos_k * pair
        out = np.empty_like(state)
        out[:, 0] = np.exp(2j * beta) * alpha_z
        out[:, 1] = np.exp(-2j * beta) * pair_z
        return out

    def measure(self, state: np.ndarray) -> MeasurementRecord:
        n = self.spec.n_sites
        alpha, pair = state[:, 0], state[:, 1]
        occupation = np.abs(pair) ** 2
        x = 1.0 - 4.0 * np.sum(occupation) / n
        zz = 4.0 * np.sum(self.cos_k * occupation - self.sin_k * np.imag(pair.conj() * alpha)) / n
        return assemble_record(np.full(n, zz), np.full(n, x), self.spec)


def run_schedule_uniform_k(spec: ChainSpec, sched: Schedule) -> Tuple[List[MeasurementRecord], float]:
    return MomentumBackend(spec).run_schedule(sched)
