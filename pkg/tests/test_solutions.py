from dataclasses import replace

import numpy as np
import pytest

from lrsolve import checks
from lrsolve.drive import DriveSpec
from lrsolve.gridstates import Trajectory, fidelity, hermite_state, inner
from lrsolve.invariants import QuadCoeffs
from lrsolve.oracle import PropagatorConfig, fidelity_series, propagate, propagate_many
from lrsolve.solutions import (
    PhaseError,
    TruncationError,
    eigen_residual,
    eigenstate,
    evolve_general,
    expand_initial,
    accumulated_phase,
    orthonormality_error,
    particular_solution,
    transform_sequence,
    volkov_residuals,
    volkov_state,
)


@pytest.fixture(scope="module")
def short_path(short_force):
    return checks.quadratic_path(short_force)


def test_free_particle_transform_is_the_propagator(short_force):
    # seed (1,0,1), f = 0: V(t) = exp(-i t p^2 / 2) exactly, so the Gouy
    # phase sits inside V and the remaining phase vanishes
    sc = replace(short_force, drive=DriveSpec.zero())
    path = checks.quadratic_path(sc)
    seq = transform_sequence(path, sc.record_times)
    np.testing.assert_allclose([s.p_chirp for s in seq], -sc.record_times / 2, atol=1e-12)
    np.testing.assert_allclose([s.q_chirp for s in seq], 0.0, atol=1e-12)
    table = accumulated_phase(path, [0, 2], sc.record_times, sc, params=seq)
    assert np.abs(table.phase).max() < 1e-8
    assert table.max_imag_residue < 1e-9


def test_particular_solution_matches_oracle(short_force, short_path):
    times = short_force.record_times
    for n in (0, 3):
        sol = particular_solution(short_path, n, times, short_force)
        num = propagate(sol.snapshots[0], short_force, times[1:], PropagatorConfig(dt=short_force.oracle_dt))
        fs = fidelity_series(sol.trajectory, Trajectory(times, (sol.snapshots[0],) + num.states))
        assert (1 - fs.fidelity).max() < 1e-10
        assert np.abs(fs.phase).max() < 1e-6
        assert eigen_residual(short_path, sol).max() < 1e-7
        assert sol.eigenvalue == pytest.approx(2 * n + 1)


def test_phases_are_affine_in_n(short_force, short_path):
    t = accumulated_phase(short_path, [0, 1, 2, 3], short_force.record_times, short_force)
    step = t.row(1) - t.row(0)
    for n in (2, 3):
        np.testing.assert_allclose(t.row(n) - t.row(0), n * step, atol=1e-8)


def test_phase_table_interpolation(short_force, short_path):
    t = accumulated_phase(short_path, [1], short_force.record_times, short_force)
    fine = accumulated_phase(short_path, [1], [0.0, 0.05, 0.1], short_force)
    assert t.at(1, 0.05) == pytest.approx(fine.row(1)[1], abs=1e-9)
    with pytest.raises(ValueError):
        t.at(1, 5.0)


def test_phase_error_on_broken_integrand(short_force, short_path):
    with pytest.raises(PhaseError):
        accumulated_phase(short_path, [0], short_force.record_times, short_force, delta=0.05, imag_tol=1e-14)


def test_orthonormal_family(short_force, short_path):
    times = short_force.record_times[::5]
    sols = [particular_solution(short_path, n, times, short_force) for n in range(4)]
    assert orthonormality_error(sols) < 1e-10


def test_general_solution_coherent_state(short_force, short_path):
    psi0 = checks.coherent_state(short_force.grid, 1.0)
    gs = expand_initial(psi0, short_path, short_force.n_max, short_force)
    assert gs.truncation_loss < 1e-10
    # Poisson weights of a unit displacement: |c_n| = exp(-1/4) (1/sqrt 2)^n / sqrt(n!)
    n = np.arange(4)
    want = np.exp(-0.25) * 2.0 ** (-n / 2) / np.sqrt([1, 1, 2, 6])
    np.testing.assert_allclose(np.abs(gs.coefficients[:4]), want, atol=1e-12)
    assert 1 - fidelity(evolve_general(gs, 0.0), psi0) < 1e-12
    num = propagate(psi0, short_force, [0.2], PropagatorConfig(dt=short_force.oracle_dt)).states[-1]
    assert 1 - fidelity(evolve_general(gs, 0.2), num) < 1e-10
    # off-grid time via interpolated phases
    mid = propagate(psi0, short_force, [0.13], PropagatorConfig(dt=short_force.oracle_dt)).states[-1]
    assert 1 - fidelity(evolve_general(gs, 0.13), mid) < 1e-8
    with pytest.raises(ValueError):
        evolve_general(gs, 0.5)


def test_truncation_guard(short_force, short_path):
    far = checks.coherent_state(short_force.grid, 6.0)
    with pytest.raises(TruncationError):
        expand_initial(far, short_path, 4, short_force)


def test_squeezed_seed_eigenstates(short_force):
    sc = replace(short_force, quad_seed=QuadCoeffs(4.0, 0.0, 0.25))
    path = checks.quadratic_path(sc)
    psi, prm = eigenstate(path, 1, 0.0, sc.grid)
    assert prm.level_spacing == pytest.approx(2.0)
    times = sc.record_times
    sol = particular_solution(path, 1, times, sc)
    assert eigen_residual(path, sol).max() < 1e-7
    num = propagate_many([sol.snapshots[0]], sc, times[1:], PropagatorConfig(dt=sc.oracle_dt))[0]
    assert 1 - fidelity(num.states[-1], sol.snapshots[-1]) < 1e-8


def test_volkov_states(constant_force):
    for k in (0.0, 1.0):
        r = volkov_residuals(k, 0.8, constant_force)
        assert r["eigen"] < 1e-8 and r["tdse"] < 1e-6
    psi = volkov_state(0.0, 0.0, constant_force)
    np.testing.assert_allclose(np.abs(psi.amplitudes), 1.0)


def test_volkov_needs_linear_potential(constant_force):
    sc = replace(constant_force, omega=DriveSpec("constant", 1.0))
    with pytest.raises(ValueError):
        volkov_state(0.0, 0.1, sc)


def test_cross_invariant(short_force, short_path):
    sol = particular_solution(short_path, 0, short_force.record_times, short_force)
    for c in checks.cross_suite(short_force, sol):
        assert c.passed, c.line()
