"""Estimator-style front ends.

Both classes follow the scikit-learn conventions: hyper-parameters are set in
``__init__`` and exposed through ``get_params``/``set_params``; ``fit`` takes
the initial state and stores learned attributes with a trailing underscore.

>>> from lrsolve import scenario
>>> sc = scenario.bundled("free_particle")
>>> solver = InvariantSolver(sc).fit(hermite_state(0, sc.grid))   # doctest: +SKIP
>>> solver.predict([0.0, 0.5, 1.0])                               # doctest: +SKIP
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .gridstates import Trajectory, Wavefunction, apply_transform, hermite_state, inner
from .invariants import generate_ode_system, integrate
from .oracle import PropagatorConfig, propagate
from .solutions import _basis_state, evolve_general, expand_initial
from .transforms import transform_at
from .validation import check_elliptic, check_times, check_wavefunction

__all__ = ["InvariantSolver", "SplitStepPropagator", "hermite_state"]


class InvariantSolver(TransformerMixin, BaseEstimator):
    """Exact evolution through the quadratic-invariant eigenbasis.

    ``fit`` integrates the invariant, expands the initial state into
    ``c_n`` and tabulates the phases.  ``transform`` maps a state at ``t0``
    to its coefficient vector, ``inverse_transform`` maps back, ``predict``
    evolves the fitted state.

    Parameters
    ----------
    scenario : Scenario
    n_max : int or None
        Basis cut-off; ``None`` uses ``scenario.n_max``.
    max_loss : float
        Largest accepted truncation loss ``1 - sum |c_n|^2``.
    """

    def __init__(self, scenario, n_max: int | None = None, max_loss: float = 1e-6):
        self.scenario = scenario
        self.n_max = n_max
        self.max_loss = max_loss

    def _n_max(self) -> int:
        return self.scenario.n_max if self.n_max is None else self.n_max

    def fit(self, psi0, y=None):
        sc = self.scenario
        check_elliptic(sc.quad_seed)
        psi0 = check_wavefunction(psi0, sc.grid, normalized=True)
        self.path_ = integrate(generate_ode_system("quadratic", sc), sc.quad_seed, sc.t0, sc.t1, sc.path_step)
        self.solution_ = expand_initial(psi0, self.path_, self._n_max(), sc, max_loss=self.max_loss)
        self.coefficients_ = self.solution_.coefficients
        self.truncation_loss_ = self.solution_.truncation_loss
        self.level_spacing_ = self.solution_.params[0].level_spacing
        return self

    def transform(self, X) -> np.ndarray:
        """Coefficients ``c_n`` of one state (or a list of states) at ``t0``."""
        check_is_fitted(self, "path_")
        states = [X] if isinstance(X, Wavefunction) else list(X)
        params0 = self.solution_.params[0]
        grid = self.scenario.grid
        basis = [apply_transform(_basis_state(n, grid), params0) for n in range(self._n_max() + 1)]
        out = np.array([[inner(b, check_wavefunction(s, grid)) for b in basis] for s in states])
        return out[0] if isinstance(X, Wavefunction) else out

    def inverse_transform(self, coefficients) -> Wavefunction:
        check_is_fitted(self, "path_")
        c = np.asarray(coefficients, dtype=complex)
        grid = self.scenario.grid
        acc = sum(cn * _basis_state(n, grid).amplitudes for n, cn in enumerate(c) if cn != 0)
        return apply_transform(Wavefunction(acc, grid), self.solution_.params[0])

    def predict(self, times) -> Trajectory:
        check_is_fitted(self, "path_")
        t = check_times(times, self.scenario.t0, self.scenario.t1)
        return Trajectory(t, tuple(evolve_general(self.solution_, float(s)) for s in t))

    def invariant_parameters(self, t: float):
        check_is_fitted(self, "path_")
        return transform_at(self.path_, t)


class SplitStepPropagator(BaseEstimator):
    """Reference split-step Fourier evolution with the same fit/predict surface."""

    def __init__(self, scenario, dt: float = 1e-4, damping_width: float = 0.0):
        self.scenario = scenario
        self.dt = dt
        self.damping_width = damping_width

    def fit(self, psi0, y=None):
        self.psi0_ = check_wavefunction(psi0, self.scenario.grid)
        return self

    def predict(self, times) -> Trajectory:
        check_is_fitted(self, "psi0_")
        t = np.atleast_1d(np.asarray(times, dtype=float))
        cfg = PropagatorConfig(dt=self.dt, damping_width=self.damping_width)
        return propagate(self.psi0_, self.scenario, t, cfg)
