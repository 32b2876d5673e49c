import json

import numpy as np
import pytest

from qaoa_rl.backends.statevector import z_energies
from qaoa_rl.chain import (
    classical_extremes,
    load_instance,
    make_disordered,
    make_uniform,
    qaoa_bound,
    residual_energy_density,
    save_instance,
    schedule_to_s,
)
from qaoa_rl.errors import InvalidInputError, NumericalError
from qaoa_rl.types import EnergyExtremes, Schedule


def test_make_uniform():
    spec = make_uniform(8, 1.0)
    assert spec.n_sites == 8
    assert spec.couplings == (1.0,) * 8
    assert spec.is_uniform
    assert make_uniform(4, 0.5).couplings == (0.5,) * 4


@pytest.mark.parametrize("n", [7, 2, 0])
def test_make_uniform_rejects_bad_sizes(n):
    with pytest.raises(InvalidInputError):
        make_uniform(n, 1.0)


def test_make_uniform_rejects_coupling_out_of_range():
    with pytest.raises(InvalidInputError):
        make_uniform(8, 1.5)


def test_disordered_is_deterministic_per_seed():
    a = make_disordered(8, 0.0, 42)
    b = make_disordered(8, 0.0, 42)
    c = make_disordered(8, 0.0, 43)
    assert a.couplings == b.couplings
    assert a.couplings != c.couplings
    assert a.seed == 42
    big = make_disordered(128, 0.0, 7)
    assert all(0.0 <= j <= 1.0 for j in big.couplings)


def test_classical_extremes_uniform():
    assert classical_extremes(make_uniform(8, 1.0)) == EnergyExtremes(e_min=-8.0, e_max=8.0)
    assert classical_extremes(make_uniform(4, 0.5)) == EnergyExtremes(e_min=-2.0, e_max=2.0)


@pytest.mark.parametrize("n,seed", [(4, 1), (8, 42), (10, 5), (12, 9)])
def test_classical_extremes_match_enumeration(n, seed):
    spec = make_disordered(n, 0.0, seed)
    energies = z_energies(spec.couplings)
    extremes = classical_extremes(spec)
    assert extremes.e_min == pytest.approx(energies.min(), abs=1e-12)
    assert extremes.e_max == pytest.approx(energies.max(), abs=1e-12)


def test_classical_extremes_rejects_field():
    with pytest.raises(InvalidInputError):
        classical_extremes(make_uniform(8, 1.0, h=0.5))


@pytest.mark.parametrize("e_p,expected", [(-8.0, 0.0), (0.0, 0.5), (8.0, 1.0)])
def test_residual_energy_density(e_p, expected):
    assert residual_energy_density(e_p, EnergyExtremes(e_min=-8.0, e_max=8.0)) == expected


def test_residual_energy_density_slack_and_range():
    extremes = EnergyExtremes(e_min=-8.0, e_max=8.0)
    assert residual_energy_density(-8.0 - 5e-10, extremes) == 0.0
    with pytest.raises(NumericalError):
        residual_energy_density(-8.1, extremes)
    with pytest.raises(NumericalError):
        residual_energy_density(float("nan"), extremes)
    with pytest.raises(InvalidInputError):
        residual_energy_density(0.0, EnergyExtremes(e_min=1.0, e_max=1.0))


def test_residual_energy_density_is_affine_invariant(rng):
    for _ in range(20):
        lo, width, shift = rng.uniform(-10, 0), rng.uniform(0.5, 20), rng.uniform(-100, 100)
        e = lo + rng.uniform(0, 1) * width
        base = residual_energy_density(e, EnergyExtremes(e_min=lo, e_max=lo + width))
        moved = residual_energy_density(e + shift, EnergyExtremes(e_min=lo + shift, e_max=lo + width + shift))
        assert moved == pytest.approx(base, abs=1e-12)


def test_qaoa_bound():
    assert qaoa_bound(8, 128) == pytest.approx(1 / 18)
    assert qaoa_bound(4, 8) == 0.0
    assert qaoa_bound(1, 4) == 0.25
    values = [qaoa_bound(p, 64) for p in range(1, 40)]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert qaoa_bound(3, 8) == qaoa_bound(3, 128)


def test_schedule_to_s():
    assert schedule_to_s(Schedule(gammas=(0.3,), betas=(0.3,))) == pytest.approx([0.5])
    assert schedule_to_s(Schedule(gammas=(0.2, 0.4), betas=(0.6, 0.4))) == pytest.approx([0.25, 0.5])
    assert schedule_to_s(Schedule(gammas=(0.3,), betas=(0.1,))) == pytest.approx([0.75])
    with pytest.raises(InvalidInputError):
        schedule_to_s(Schedule.zeros(2))
    assert schedule_to_s(Schedule(gammas=(0.0, 0.3), betas=(0.0, 0.1)), strict=False) == [None, pytest.approx(0.75)]


def test_instance_file_round_trip(tmp_path):
    spec = make_uniform(8, 1.0)
    path = save_instance(spec, tmp_path / "nested" / "u8.json")
    assert load_instance(path) == spec
    disordered = make_disordered(8, 0.0, 42)
    assert load_instance(save_instance(disordered, tmp_path / "d8.json")) == disordered


@pytest.mark.parametrize(
    "payload",
    [
        {"n": 7, "h": 0.0, "seed": None, "couplings": [1.0] * 7},
        {"n": 8, "h": 0.0, "seed": None, "couplings": [1.5] + [1.0] * 7},
        {"n": 8, "h": 0.0, "seed": None, "couplings": [1.0] * 7},
        {"n": 8, "h": 0.0, "seed": None, "couplings": [1.0] * 8, "extra": 1},
    ],
)
def test_load_instance_rejects_invalid_files(tmp_path, payload):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(InvalidInputError):
        load_instance(path)


def test_load_instance_missing_file(tmp_path):
    with pytest.raises(InvalidInputError):
        load_instance(tmp_path / "missing.json")


def test_total_coupling_matches_array(disordered8):
    assert disordered8.total_coupling == pytest.approx(float(np.sum(disordered8.coupling_array())))
