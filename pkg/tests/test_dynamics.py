import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import lindblad_ivp, rabi_population, schrodinger_ivp
from topomagnon.dynamics import (NoiseModel, Trajectory, chiral_displacement, evolve_lindblad,
                                 evolve_lindblad_states, evolve_rk4, evolve_unitary, propagate,
                                 site_density, site_state, time_averaged_cd, time_grid,
                                 winding_estimate)
from topomagnon.errors import InputError, NoiseModelError
from topomagnon.lattice import BondPattern, hamiltonian_from_bonds

T1_SWEET = (20.0, 17.0, 14.8, 17.9)
T2_SWEET = (18.5, 16.0, 17.0, 15.0)

bond_lists = st.lists(st.floats(0.1, 8), min_size=1, max_size=7)


def test_rabi_transfer_between_two_sites():
    times = time_grid(0.1, 1e-3)
    traj = evolve_unitary(hamiltonian_from_bonds([5.0]), site_state(2, 1), times)
    expected = [rabi_population(5.0, t) for t in times]
    np.testing.assert_allclose(traj.site(1), expected, atol=1e-12)
    assert traj.site(1)[50] == pytest.approx(0.0, abs=1e-20)  # t = 0.05 us


def test_gegg_oscillates_mainly_between_b1_and_a2():
    traj = evolve_unitary(hamiltonian_from_bonds([1, 5, 1]), site_state(4, 2), time_grid(1.0))
    mean = traj.populations.mean(axis=0)
    assert mean[1] + mean[2] > 0.9
    assert traj.site(3).max() > 0.9


@pytest.mark.parametrize("bonds, site", [([1, 5, 1], 2), ([1, 5, 1, 5], 1), ([4, 1, 1, 4], 3),
                                         ([2.0, 0.7, 3.1, 1.2, 0.4], 4)])
def test_unitary_against_adaptive_integrator(bonds, site):
    h = hamiltonian_from_bonds(bonds)
    times = time_grid(1.0, 1e-2)
    psi0 = site_state(len(bonds) + 1, site)
    exact = evolve_unitary(h, psi0, times).populations
    np.testing.assert_allclose(exact, schrodinger_ivp(h, psi0, times), atol=1e-8)


def test_unitary_against_fixed_step_rk4():
    h = hamiltonian_from_bonds(BondPattern((1.0, 5.0, 1.0), (0.4, -1.0, 2.0)))
    times = time_grid(1.0, 1e-2)
    psi0 = site_state(4, 2)
    np.testing.assert_allclose(evolve_unitary(h, psi0, times).populations,
                               evolve_rk4(h, psi0, times, dt=1e-4).populations, atol=1e-6)


@given(bond_lists, st.floats(0.0, 3.0))
def test_unitary_norm_is_conserved(bonds, t_max):
    h = hamiltonian_from_bonds(bonds)
    n = len(bonds) + 1
    psi = propagate(h, site_state(n, 1), np.linspace(0, t_max, 7))
    np.testing.assert_allclose(np.linalg.norm(psi, axis=1), 1.0, atol=1e-10)


@given(bond_lists, st.floats(0.01, 3.0))
def test_unitary_is_reversible(bonds, t):
    h = hamiltonian_from_bonds(bonds)
    n = len(bonds) + 1
    psi0 = site_state(n, n)
    fwd = propagate(h, psi0, [t])[0]
    back = propagate(h, fwd, [-t])[0]
    np.testing.assert_allclose(back, psi0, atol=1e-9)


def test_unitary_never_populates_vacuum():
    traj = evolve_unitary(hamiltonian_from_bonds([1, 5, 1, 5]), site_state(5, 1), time_grid(1.0))
    assert np.all(traj.vacuum == 0)
    np.testing.assert_allclose(traj.populations.sum(axis=1), 1.0, atol=1e-8)


def test_unitary_input_errors():
    h = hamiltonian_from_bonds([1, 5, 1])
    with pytest.raises(InputError):
        evolve_unitary(h, np.array([1.0, 1.0, 0, 0]), time_grid(1.0))
    with pytest.raises(InputError):
        evolve_unitary(h, site_state(3, 1), time_grid(1.0))
    with pytest.raises(InputError):
        evolve_unitary(h, site_state(4, 1), [0.1, 0.2])
    with pytest.raises(InputError):
        site_state(4, 5)


# chiral displacement ------------------------------------------------------

def test_cd_initial_values():
    assert chiral_displacement(np.array([0, 1, 0, 0.0]))[0] == -1
    assert chiral_displacement(np.array([1, 0, 0, 0.0]))[0] == 1
    assert chiral_displacement(np.full(4, 0.25))[0] == 0


def test_cd_odd_chain_missing_b_site():
    # a3 carries weight 3, there is no b3
    assert chiral_displacement(np.array([0, 0, 0, 0, 1.0]))[0] == 3


def test_time_average_of_constant_cd():
    times = np.linspace(0, 2, 11)
    traj = Trajectory(times, np.zeros((11, 2)), np.zeros(11), np.full(11, 0.37))
    assert time_averaged_cd(traj) == pytest.approx(0.37)
    assert winding_estimate(traj) == pytest.approx(0.74)


def test_time_average_needs_two_points():
    traj = Trajectory(np.zeros(1), np.zeros((1, 2)), np.zeros(1), np.zeros(1))
    with pytest.raises(InputError):
        time_averaged_cd(traj)


def test_ideal_winding_protocol_frozen_value():
    # regression value of this model; exact eigendecomposition and DOP853 agree on it
    h = hamiltonian_from_bonds([1, 5, 1])
    times = time_grid(1.0)
    traj = evolve_unitary(h, site_state(4, 2), times)
    assert time_averaged_cd(traj) == pytest.approx(0.403103384, abs=1e-8)
    ivp = schrodinger_ivp(h, site_state(4, 2), times)
    avg = np.trapezoid(chiral_displacement(ivp), times) / times[-1]
    assert avg == pytest.approx(time_averaged_cd(traj), abs=1e-8)


def test_trivial_winding_protocol_near_zero():
    traj = evolve_unitary(hamiltonian_from_bonds([5, 1, 5]), site_state(4, 2), time_grid(1.0))
    assert abs(time_averaged_cd(traj)) <= 0.02


# noise and Lindblad ---------------------------------------------------------

def test_noise_model_rates_and_validation():
    nm = NoiseModel((20.0,), (18.5,))
    assert nm.dephasing_rates[0] == pytest.approx(1 / 18.5 - 1 / 40)
    with pytest.raises(NoiseModelError):
        NoiseModel((10.0,), (25.0,))
    with pytest.raises(NoiseModelError):
        NoiseModel((0.0,), (1.0,))
    with pytest.raises(NoiseModelError):
        NoiseModel((1.0, 2.0), (1.0,))
    assert NoiseModel.ideal(3).dephasing_rates.tolist() == [0, 0, 0]


def test_pure_relaxation_of_single_qubit():
    h = np.zeros((1, 1))
    traj = evolve_lindblad(h, NoiseModel((20.0,), (40.0,)), site_density(1, 1), time_grid(1.0, 0.01))
    np.testing.assert_allclose(traj.site(1), np.exp(-traj.times / 20), atol=1e-12)
    assert traj.site(1)[-1] == pytest.approx(0.9512, abs=1e-4)
    np.testing.assert_allclose(traj.vacuum, 1 - traj.site(1), atol=1e-12)


def test_infinite_coherence_reproduces_unitary():
    h = hamiltonian_from_bonds([1, 5, 1])
    times = time_grid(1.0)
    lind = evolve_lindblad(h, NoiseModel.ideal(4), site_density(4, 2), times)
    unit = evolve_unitary(h, site_state(4, 2), times)
    np.testing.assert_allclose(lind.populations, unit.populations, atol=1e-8)


def test_lindblad_against_jump_operator_oracle():
    h = hamiltonian_from_bonds(BondPattern((1.0, 5.0, 1.0), (0.0, 0.7, 0.0)))
    times = time_grid(1.0, 0.02)
    rho0 = site_density(4, 2)
    ours = evolve_lindblad_states(h, NoiseModel(T1_SWEET, T2_SWEET), rho0, times)
    ref = lindblad_ivp(h, T1_SWEET, T2_SWEET, rho0, times)
    np.testing.assert_allclose(np.array(ours), ref, atol=1e-8)


def test_lindblad_strong_noise_against_oracle():
    h = hamiltonian_from_bonds([2.0, 1.0])
    t1, t2 = (0.5, 1.0, 0.8), (0.3, 1.5, 0.2)
    times = time_grid(1.0, 0.05)
    ours = evolve_lindblad_states(h, NoiseModel(t1, t2), site_density(3, 1), times)
    np.testing.assert_allclose(np.array(ours), lindblad_ivp(h, t1, t2, site_density(3, 1), times), atol=1e-8)


@settings(max_examples=15)
@given(bond_lists, st.floats(1.0, 50.0), st.floats(0.2, 1.0), st.integers(1, 8))
def test_lindblad_trace_and_positivity(bonds, t1, ratio, site):
    n = len(bonds) + 1
    site = min(site, n)
    nm = NoiseModel((t1,) * n, (2 * t1 * ratio,) * n)
    h = hamiltonian_from_bonds(bonds)
    rhos = evolve_lindblad_states(h, nm, site_density(n, site), time_grid(1.0, 0.05))
    for rho in rhos:
        assert abs(np.trace(rho).real - 1) < 1e-8
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(rho).min() >= -1e-9


def test_lindblad_input_errors():
    h = hamiltonian_from_bonds([1, 5, 1])
    with pytest.raises(NoiseModelError):
        evolve_lindblad(h, NoiseModel.ideal(3), site_density(4, 1), time_grid(0.1))
    bad = site_density(4, 1) * 2
    with pytest.raises(InputError):
        evolve_lindblad(h, NoiseModel.ideal(4), bad, time_grid(0.1))
    neg = np.diag([0, 1.5, -0.5, 0, 0]).astype(complex)
    with pytest.raises(InputError):
        evolve_lindblad(h, NoiseModel.ideal(4), neg, time_grid(0.1))


def test_decoherent_winding_protocol_frozen_value():
    h = hamiltonian_from_bonds([1, 5, 1])
    traj = evolve_lindblad(h, NoiseModel(T1_SWEET, T2_SWEET), site_density(4, 2), time_grid(1.0))
    # regression value of this model with sweet-spot coherence
    assert time_averaged_cd(traj) == pytest.approx(0.38831, abs=2e-5)
    np.testing.assert_allclose(traj.populations.sum(axis=1) + traj.vacuum, 1.0, atol=1e-8)


def test_time_grid():
    g = time_grid(1.0)
    assert len(g) == 1001 and g[-1] == 1.0
    with pytest.raises(InputError):
        time_grid(0.0)
