import math
from functools import reduce

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import expm

from qaoa_rl.backends.fermion import (
    FermionBackend,
    MomentumBackend,
    bdg_eigensystem,
    build_quadratic,
    correlators,
    evolve,
    init_vacuum,
    measure,
    momentum_grid,
    run_schedule_fermion,
    run_schedule_uniform_k,
)
from qaoa_rl.backends.statevector import StatevectorBackend
from qaoa_rl.chain import classical_extremes, make_disordered, make_uniform, qaoa_bound, residual_energy_density
from qaoa_rl.errors import InvalidInputError
from qaoa_rl.types import Schedule
from tests.conftest import random_schedule


def assert_records_close(a, b, atol):
    assert len(a) == len(b)
    for ra, rb in zip(a, b):
        assert_allclose(ra.zz, rb.zz, atol=atol)
        assert_allclose(ra.x, rb.x, atol=atol)
        assert ra.energy == pytest.approx(rb.energy, abs=atol)


def test_hx_spectrum_is_plus_minus_two():
    _, hx = build_quadratic(make_uniform(8, 1.0))
    assert_allclose(np.sort(bdg_eigensystem(hx).eigenvalues), [-2.0] * 8 + [2.0] * 8, atol=1e-12)
    assert hx.constant == -8.0


def test_hz_spectrum_is_particle_hole_symmetric(disordered8):
    hz, _ = build_quadratic(disordered8)
    eigenvalues = np.sort(bdg_eigensystem(hz).eigenvalues)
    assert_allclose(eigenvalues, -eigenvalues[::-1], atol=1e-12)


def test_vacuum_is_plus_state(disordered8):
    record = measure(init_vacuum(8), disordered8)
    assert_allclose(record.zz, 0.0, atol=1e-15)
    assert_allclose(record.x, 1.0)
    assert record.hx == pytest.approx(-8.0)


def test_mixer_leaves_vacuum_measurements_unchanged(uniform8):
    _, hx = build_quadratic(uniform8)
    state = evolve(init_vacuum(8), bdg_eigensystem(hx), 0.73)
    record = measure(state, uniform8)
    assert_allclose(record.zz, 0.0, atol=1e-14)
    assert_allclose(record.x, 1.0, atol=1e-14)


def test_fermion_matches_oracle_on_random_instances():
    rng = np.random.default_rng(2024)
    for trial in range(200):
        n = int(rng.choice([4, 6, 8, 10]))
        p = int(rng.integers(1, 5))
        spec = make_uniform(n, 1.0) if trial % 10 == 0 else make_disordered(n, 0.0, int(rng.integers(1 << 30)))
        sched = random_schedule(rng, p)
        oracle, e_oracle = StatevectorBackend(spec).run_schedule(sched)
        fermion, e_fermion = FermionBackend(spec).run_schedule(sched)
        assert_records_close(fermion, oracle, atol=1e-8)
        assert e_fermion == pytest.approx(e_oracle, abs=1e-8)


@pytest.mark.parametrize("j", [1.0, 0.5])
def test_momentum_matches_oracle_on_uniform_chain(j, rng):
    spec = make_uniform(8, j)
    for p in (1, 2, 4):
        sched = random_schedule(rng, p)
        momentum, e_momentum = run_schedule_uniform_k(spec, sched)
        oracle, e_oracle = StatevectorBackend(spec).run_schedule(sched)
        assert_records_close(momentum, oracle, atol=1e-8)
        assert e_momentum == pytest.approx(e_oracle, abs=1e-8)


def test_momentum_matches_fermion_on_long_chain(rng):
    spec = make_uniform(128, 1.0)
    sched = random_schedule(rng, 5)
    momentum, e_momentum = run_schedule_uniform_k(spec, sched)
    fermion, e_fermion = run_schedule_fermion(spec, sched)
    assert_records_close(momentum, fermion, atol=1e-9)
    assert e_momentum == pytest.approx(e_fermion, abs=1e-9)


@pytest.mark.parametrize("backend_cls", [StatevectorBackend, FermionBackend, MomentumBackend])
def test_single_z_layer_closed_form(backend_cls):
    spec = make_uniform(8, 0.7) if backend_cls is MomentumBackend else make_disordered(8, 0.0, 5)
    gamma = 0.41
    backend = backend_cls(spec)
    record = backend.measure(backend.apply_layer(backend.initial_state(), gamma, 0.0))
    j = spec.coupling_array()
    expected_x = np.cos(2 * gamma * np.roll(j, 1)) * np.cos(2 * gamma * j)
    assert_allclose(record.x, expected_x, atol=1e-12)
    assert_allclose(record.zz, 0.0, atol=1e-12)


def test_gaussian_state_stays_isometric(disordered8, rng):
    backend = FermionBackend(make_disordered(64, 0.0, 11))
    state = backend.initial_state()
    for _ in range(20):
        state = backend.apply_layer(state, *rng.uniform(0, math.pi / 2, size=2))
    assert state.isometry_error() < 1e-10


def test_momentum_rejects_disordered_chain(disordered8):
    with pytest.raises(InvalidInputError):
        MomentumBackend(disordered8)


def test_momentum_grid():
    assert_allclose(momentum_grid(4), [math.pi / 4, 3 * math.pi / 4])
    assert momentum_grid(128).size == 64


def test_zero_schedule_keeps_plus_state(uniform8):
    records, e_p = FermionBackend(uniform8).run_schedule(Schedule.zeros(3))
    assert e_p == pytest.approx(0.0, abs=1e-14)
    assert_allclose(records[-1].x, 1.0, atol=1e-14)


SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.diag([1.0, -1.0])
# annihilator on one site: |sx=-1> -> |sx=+1>
LOWER = 0.5 * np.array([[1.0, -1.0], [1.0, -1.0]])


def site_operator(op, site, n):
    return reduce(np.kron, [op if k == site else np.eye(2) for k in range(n)])


def dense_annihilators(n):
    ops = []
    for j in range(n):
        string = reduce(np.matmul, [site_operator(SX, l, n) for l in range(j)], np.eye(1 << n))
        ops.append(string @ site_operator(LOWER, j, n))
    return ops


def test_correlators_match_dense_jordan_wigner(rng):
    n = 4
    spec = make_disordered(n, 0.0, 17)
    couplings = spec.coupling_array()
    hz_dense = -sum(couplings[j] * site_operator(SZ, j, n) @ site_operator(SZ, (j + 1) % n, n) for j in range(n))
    hx_dense = -sum(site_operator(SX, j, n) for j in range(n))
    psi = np.full(1 << n, 2 ** (-n / 2), dtype=complex)

    hz, hx = build_quadratic(spec)
    hz_eig, hx_eig = bdg_eigensystem(hz), bdg_eigensystem(hx)
    state = init_vacuum(n)
    for gamma, beta in rng.uniform(0.0, math.pi / 2, size=(3, 2)):
        psi = expm(-1j * beta * hx_dense) @ (expm(-1j * gamma * hz_dense) @ psi)
        state = evolve(evolve(state, hz_eig, gamma), hx_eig, beta)

    c = dense_annihilators(n)
    g_dense = np.array([[np.vdot(psi, c[i].conj().T @ c[j] @ psi) for j in range(n)] for i in range(n)])
    f_dense = np.array([[np.vdot(psi, c[i] @ c[j] @ psi) for j in range(n)] for i in range(n)])
    g, f = correlators(state)
    assert_allclose(g, g_dense, atol=1e-10)
    assert_allclose(f, f_dense, atol=1e-10)


def test_hz_evolution_reverses(disordered8, rng):
    hz, hx = build_quadratic(disordered8)
    hz_eig, hx_eig = bdg_eigensystem(hz), bdg_eigensystem(hx)
    state = evolve(evolve(init_vacuum(8), hz_eig, 0.37), hx_eig, 0.52)
    before = measure(state, disordered8)
    theta = rng.uniform(0.0, math.pi)
    after = measure(evolve(evolve(state, hz_eig, theta), hz_eig, -theta), disordered8)
    assert_records_close([after], [before], atol=1e-10)


def test_bound_holds_on_long_uniform_ring(rng):
    spec = make_uniform(128, 1.0)
    backend = MomentumBackend(spec)
    extremes = classical_extremes(spec)
    for _ in range(30):
        p = int(rng.integers(1, 9))
        eps = residual_energy_density(backend.final_energy(random_schedule(rng, p)), extremes)
        assert eps >= qaoa_bound(p, 128) - 1e-9
