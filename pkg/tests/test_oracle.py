from dataclasses import replace

import numpy as np
import pytest

from lrsolve import checks
from lrsolve.drive import DriveSpec
from lrsolve.gridstates import Trajectory, apply_gaussian_unitary, expectation, fidelity, hermite_state
from lrsolve.oracle import (
    BoundaryContactError,
    PropagatorConfig,
    damping_mask,
    fidelity_series,
    moments,
    propagate,
    propagate_many,
    write_moments_csv,
)
from lrsolve.weyl import q


def test_free_gaussian_spreading(constant_force):
    sc = replace(constant_force, drive=DriveSpec.zero())
    g = hermite_state(0, sc.grid)
    out = propagate(g, sc, [1.0], PropagatorConfig(dt=1e-3)).states[-1]
    assert expectation(q * q, out).real == pytest.approx(1.0, abs=1e-6)


def test_constant_force_ehrenfest(constant_force):
    psi0 = apply_gaussian_unitary(checks.coherent_state(constant_force.grid, 0.5), "boost_p", 0.3)
    tr = propagate(psi0, constant_force, [0.5, 1.0], PropagatorConfig(dt=1e-3))
    f = constant_force.drive(0.0)
    for t, st in zip(tr.times, tr.states):
        assert moments(st)["q_mean"] == pytest.approx(0.5 + 0.3 * t - f * t * t / 2, abs=1e-6)


def test_second_order_rate(constant_force):
    psi0 = checks.coherent_state(constant_force.grid, 1.0)
    errs = checks.convergence_errors(psi0, constant_force, 1.0, steps=(0.02, 0.01, 0.005))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    np.testing.assert_allclose(ratios, 4.0, rtol=0.05)


def test_constant_force_splitting_is_phase_exact(constant_force):
    # the coarse-step error is a pure global phase: fidelity carries no rate
    psi0 = checks.coherent_state(constant_force.grid, 1.0)
    a = propagate(psi0, constant_force, [1.0], PropagatorConfig(dt=0.05)).states[-1]
    b = propagate(psi0, constant_force, [1.0], PropagatorConfig(dt=1e-4)).states[-1]
    assert 1 - fidelity(a, b) < 1e-12 and (a - b).norm() > 1e-6


def test_time_reversal_and_norm(constant_force):
    psi0 = checks.coherent_state(constant_force.grid, -1.0)
    fwd = propagate(psi0, constant_force, [0.7], PropagatorConfig(dt=1e-3))
    assert abs(fwd.states[-1].norm() - 1) < 1e-10
    back = propagate(fwd.states[-1], constant_force, [0.0], PropagatorConfig(dt=1e-3), t0=0.7)
    assert 1 - fidelity(back.states[-1], psi0) < 1e-9


def test_batched_matches_single(constant_force):
    a, b = hermite_state(0, constant_force.grid), hermite_state(3, constant_force.grid)
    many = propagate_many([a, b], constant_force, [0.3], PropagatorConfig(dt=1e-3))
    one = propagate(b, constant_force, [0.3], PropagatorConfig(dt=1e-3))
    np.testing.assert_array_equal(many[1].states[-1].amplitudes, one.states[-1].amplitudes)


def test_harmonic_half_period_parity(constant_force):
    sc = replace(constant_force, drive=DriveSpec.zero(), omega=DriveSpec("constant", 1.0))
    h1 = hermite_state(1, sc.grid)
    out = propagate(h1, sc, [np.pi], PropagatorConfig(dt=1e-3)).states[-1]
    assert 1 - fidelity(out, h1) < 1e-8


def test_boundary_contact(constant_force):
    far = checks.coherent_state(constant_force.grid, 16.0)
    with pytest.raises(BoundaryContactError):
        propagate(far, constant_force, [0.1], PropagatorConfig(dt=1e-2))
    out = propagate(far, constant_force, [0.1], PropagatorConfig(dt=1e-2, damping_width=0.05))
    assert out.states[-1].norm() < 1.0


def test_config_validation(constant_force):
    with pytest.raises(ValueError):
        PropagatorConfig(dt=0)
    with pytest.raises(ValueError):
        PropagatorConfig(damping_width=0.2)
    mask = damping_mask(constant_force.grid, 0.1)
    inside = np.abs(constant_force.grid.nodes) <= 0.8 * constant_force.grid.half_width
    assert np.all(mask[inside] == 1.0) and mask.min() < 1.0


def test_fidelity_series_basics(constant_force):
    g = hermite_state(0, constant_force.grid)
    h = hermite_state(1, constant_force.grid)
    times = np.array([0.0, 1.0])
    fs = fidelity_series(Trajectory(times, (g, g)), Trajectory(times, (g, g * np.exp(0.4j))))
    np.testing.assert_allclose(fs.fidelity, 1.0)
    np.testing.assert_allclose(fs.phase, [0.0, 0.4])
    assert fidelity_series(Trajectory(times[:1], (g,)), Trajectory(times[:1], (h,))).fidelity[0] < 1e-12
    with pytest.raises(ValueError):
        fidelity_series(Trajectory(times, (g, g)), Trajectory(times[:1], (g,)))


def test_moments_csv(tmp_path, constant_force):
    g = hermite_state(0, constant_force.grid)
    write_moments_csv(tmp_path / "m.csv", Trajectory(np.array([0.0]), (g,)), constant_force)
    head, row = (tmp_path / "m.csv").read_text().splitlines()
    assert head == "t,norm,q_mean,p_mean,q_var,energy"
    vals = [float(v) for v in row.split(",")]
    assert vals[1] == pytest.approx(1.0) and vals[4] == pytest.approx(0.5) and vals[5] == pytest.approx(0.25)
