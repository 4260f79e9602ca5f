from dataclasses import replace

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from lrsolve import checks
from lrsolve.estimators import InvariantSolver, SplitStepPropagator
from lrsolve.gridstates import Wavefunction, fidelity
from lrsolve.invariants import QuadCoeffs
from lrsolve.transforms import NotEllipticError


@pytest.fixture(scope="module")
def fitted(short_force):
    psi0 = checks.coherent_state(short_force.grid, 1.0)
    return InvariantSolver(short_force, n_max=20).fit(psi0), psi0


def test_params_and_clone(short_force):
    est = InvariantSolver(short_force, n_max=12, max_loss=1e-5)
    assert est.get_params() == {"scenario": short_force, "n_max": 12, "max_loss": 1e-5}
    c = clone(est)
    assert c.get_params()["n_max"] == 12 and not hasattr(c, "path_")
    est.set_params(n_max=8)
    assert est.n_max == 8
    assert SplitStepPropagator(short_force).get_params()["dt"] == 1e-4


def test_not_fitted(short_force):
    with pytest.raises(NotFittedError):
        InvariantSolver(short_force).predict([0.0])


def test_transform_roundtrip(fitted):
    est, psi0 = fitted
    c = est.transform(psi0)
    np.testing.assert_allclose(c, est.coefficients_)
    assert 1 - fidelity(est.inverse_transform(c), psi0) < 1e-12
    assert est.transform([psi0, psi0]).shape == (2, 21)
    assert est.level_spacing_ == pytest.approx(2.0)


def test_predict_agrees_with_propagator(fitted, short_force):
    est, psi0 = fitted
    times = [0.1, 0.2]
    a = est.predict(times)
    b = SplitStepPropagator(short_force).fit(psi0).predict(times)
    for x, y in zip(a.states, b.states):
        assert 1 - fidelity(x, y) < 1e-10


def test_input_validation(fitted, short_force):
    est, psi0 = fitted
    with pytest.raises(ValueError):
        est.predict([0.2, 0.1])
    with pytest.raises(ValueError):
        est.predict([5.0])
    with pytest.raises(ValueError, match="amplitudes"):
        InvariantSolver(short_force).fit(np.ones(3))
    with pytest.raises(ValueError):
        InvariantSolver(short_force).fit(Wavefunction(np.ones(short_force.grid.n_points), short_force.grid))
    with pytest.raises(NotEllipticError):
        InvariantSolver(replace(short_force, quad_seed=QuadCoeffs(1.0, 2.0, 1.0))).fit(psi0)


def test_raw_array_input(fitted, short_force):
    est, psi0 = fitted
    out = SplitStepPropagator(short_force).fit(psi0.amplitudes).predict(0.1)
    assert len(out) == 1
