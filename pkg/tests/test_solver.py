import numpy as np
import pytest

from subgap.floquet import build_floquet_basis
from subgap.generator import build_generator, build_static_reference
from subgap.leads import RateTable
from subgap.model import EMPTY, JunctionParams
from subgap.observables import record_from_state
from subgap.solver import (SteadyStateError, evolve, period_average,
                           periodic_steady_state_fourier)


def empty_state():
    rho = np.zeros((4, 4), dtype=complex)
    rho[EMPTY, EMPTY] = 1.0
    return rho


def test_null_generator_keeps_state():
    p = JunctionParams(omega=0.0, u_int=0.0, gamma_L=0.0, gamma_R=0.0, bias=2.0)
    basis = build_floquet_basis(p, k_max=4, n_grid=256, n_steps=500)
    gen = build_generator(basis, RateTable(p))
    rho0 = np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex)
    traj = evolve(gen, rho0, t_final=10 * basis.period, conv_tol=0.0)
    assert np.abs(traj.states[-1] - rho0).max() < 1e-10


def test_evolve_validates_initial_state():
    p = JunctionParams(bias=2.0)
    basis = build_floquet_basis(p, k_max=4, n_grid=256, n_steps=500)
    gen = build_generator(basis, RateTable(p))
    with pytest.raises(ValueError):
        evolve(gen, np.eye(4, dtype=complex))  # trace 4
    bad = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)
    bad[0, 1] = 0.5  # not Hermitian
    with pytest.raises(ValueError):
        evolve(gen, bad)


def test_positivity_monitor_flags_breach():
    from subgap.solver import PositivityError

    p = JunctionParams(bias=2.0)
    basis = build_floquet_basis(p, k_max=4, n_grid=256, n_steps=500)
    gen = build_generator(basis, RateTable(p))
    # Hermitian, unit trace, but one eigenvalue far below the -1e-3 floor
    rho0 = np.diag([1.05, -0.05, 0.0, 0.0]).astype(complex)
    with pytest.raises(PositivityError):
        evolve(gen, rho0, t_final=10.0)


def test_trajectory_trace_and_hermiticity(driven_point):
    _, _, _, gen = driven_point
    traj = evolve(gen, empty_state(), t_final=500.0)
    for rho in traj.states:
        assert abs(np.trace(rho).real - 1.0) < 1e-8
        assert abs(np.trace(rho).imag) < 1e-10
        assert np.abs(rho - rho.conj().T).max() < 1e-10


def test_evolve_matches_static_reference(undriven_point):
    p, basis, rates, gen = undriven_point
    traj = evolve(gen, empty_state(), t_final=10.0 / p.gamma_ref)
    assert traj.converged
    rec = record_from_state(gen, traj.final_state, traj=traj, solver="evolve")
    ref = build_static_reference(p, rates)
    i_ref = ref.lead_current("R", ref.steady_state()) / p.gamma_ref
    assert rec.I_s_R == pytest.approx(i_ref, rel=0.01)
    # steady state of the undriven junction is diagonal
    avg = traj.final_state.average
    off = avg - np.diag(np.diag(avg))
    assert np.abs(off).max() < 1e-6


def test_initial_state_independence(driven_point):
    _, _, _, gen = driven_point
    t1 = evolve(gen, empty_state(), t_final=2500.0)
    t2 = evolve(gen, np.eye(4, dtype=complex) / 4.0, t_final=2500.0)
    assert t1.converged and t2.converged
    diff = np.abs(t1.final_state.average - t2.final_state.average).max()
    assert diff < 1e-6


def test_period_average_refuses_unconverged(driven_point):
    _, basis, _, gen = driven_point
    traj = evolve(gen, empty_state(), t_final=3 * basis.period)
    assert not traj.converged
    with pytest.raises(SteadyStateError):
        period_average(traj)
    avg = period_average(traj, force=True)
    assert abs(np.trace(avg).real - 1.0) < 1e-8


def test_period_average_static_equals_final(undriven_point):
    # with the anomalous (time-dependent proximity) channel off, the g=0
    # generator is truly time-independent: the average equals the endpoint
    p, basis, rates, _ = undriven_point
    gen = build_generator(basis, rates, include_pair=False)
    traj = evolve(gen, empty_state(), t_final=10.0 / p.gamma_ref)
    avg = period_average(traj)
    assert np.abs(avg - traj.states[-1]).max() < 1e-7
    assert np.trace(avg).real == pytest.approx(1.0, abs=1e-9)


def test_steady_state_periodicity(driven_point):
    _, basis, _, gen = driven_point
    traj = evolve(gen, empty_state(), t_final=2000.0)
    assert traj.converged
    # rho(t_f) vs rho(t_f - T) in trace norm
    diff = traj.states[-1] - traj.states[-2]
    tn = np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))).sum()
    assert tn < 1e-6


def test_fourier_reduces_to_nullspace_static(undriven_point):
    p, basis, rates, gen = undriven_point
    state = periodic_steady_state_fourier(gen)
    ref = build_static_reference(p, rates)
    rho_ref = ref.steady_state()
    # populations agree with the secular nullspace solution
    assert np.abs(np.diag(state.average).real - np.diag(rho_ref).real).max() < 1e-3
    assert np.trace(state.average).real == pytest.approx(1.0, abs=1e-10)


def test_dual_solver_agreement(driven_point):
    p, _, _, gen = driven_point
    state_f = periodic_steady_state_fourier(gen)
    rec_f = record_from_state(gen, state_f)
    traj = evolve(gen, empty_state(), t_final=2500.0)
    rec_e = record_from_state(gen, traj.final_state, traj=traj, solver="evolve")
    for field in ("I_s_L", "I_s_R", "I_p_L", "I_p_R"):
        a, b = getattr(rec_f, field), getattr(rec_e, field)
        assert abs(a - b) <= 1e-4 * max(1.0, abs(a))


def test_fourier_truncation_self_convergence(driven_point):
    _, _, _, gen = driven_point
    m0 = gen.max_harmonic + 6
    rec1 = record_from_state(gen, periodic_steady_state_fourier(gen, m_max=m0))
    rec2 = record_from_state(gen, periodic_steady_state_fourier(gen, m_max=2 * m0))
    for field in ("I_s_L", "I_s_R", "I_p_L", "I_p_R"):
        assert abs(getattr(rec1, field) - getattr(rec2, field)) < 1e-6


def test_integrator_tolerance_insensitivity(driven_point):
    p, _, _, gen = driven_point
    t1 = evolve(gen, empty_state(), t_final=1500.0, rtol=1e-9, atol=1e-12)
    t2 = evolve(gen, empty_state(), t_final=1500.0, rtol=5e-10, atol=5e-13)
    r1 = record_from_state(gen, t1.final_state, traj=t1, solver="evolve")
    r2 = record_from_state(gen, t2.final_state, traj=t2, solver="evolve")
    for field in ("I_s_L", "I_s_R", "I_p_L", "I_p_R"):
        assert abs(getattr(r1, field) - getattr(r2, field)) < 1e-6


def test_singular_subgap_system_is_handled():
    # g=0 deep subgap: conserved coherence directions make the block system
    # singular; the minimum-norm fallback must return a physical state
    p = JunctionParams(bias=0.5)
    basis = build_floquet_basis(p, k_max=4, n_grid=256, n_steps=1000)
    gen = build_generator(basis, RateTable(p))
    state = periodic_steady_state_fourier(gen)
    assert np.trace(state.average).real == pytest.approx(1.0, abs=1e-8)
    rec = record_from_state(gen, state)
    assert abs(rec.I_s_R) < 0.02  # blockaded
    assert rec.pop_odd > 0.9


def test_periodic_state_reconstruction(driven_point):
    _, basis, _, gen = driven_point
    state = periodic_steady_state_fourier(gen)
    mid = state.at(0.5 * basis.period)
    assert np.abs(mid - mid.conj().T).max() < 1e-9
    grid = state.at(state.t_grid)
    assert np.abs(grid - state.grid_states).max() < 1e-12


def test_trajectory_csv_dump(tmp_path, undriven_point):
    p, _, _, gen = undriven_point
    traj = evolve(gen, empty_state(), t_final=30 * p.period)
    path = tmp_path / "traj.csv"
    traj.to_csv(str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("t,p0")
    assert len(lines) == len(traj.times) + 1
