"""Input checks shared by the estimators and the command line."""

from __future__ import annotations

import numpy as np

from .gridstates import EDGE_TOL, Grid, Wavefunction
from .invariants import QuadCoeffs
from .transforms import NotEllipticError


def check_wavefunction(psi, grid: Grid | None = None, normalized: bool = False, edge_tol: float | None = EDGE_TOL) -> Wavefunction:
    """Coerce ``psi`` to a :class:`Wavefunction` and validate it.

    Raw arrays are accepted when ``grid`` is given.
    """
    if not isinstance(psi, Wavefunction):
        if grid is None:
            raise TypeError("a raw amplitude array needs an explicit grid")
        psi = Wavefunction(np.asarray(psi), grid)
    elif grid is not None and psi.grid != grid:
        raise ValueError(f"wavefunction grid {psi.grid} does not match {grid}")
    if normalized and abs(psi.norm() - 1.0) > 1e-10:
        raise ValueError(f"expected a normalized state, norm is {psi.norm():.12f}")
    if edge_tol is not None and psi.edge_fraction() > edge_tol:
        raise ValueError(f"state does not decay at the grid edges (edge/max = {psi.edge_fraction():.2e})")
    return psi


def check_elliptic(seed: QuadCoeffs) -> QuadCoeffs:
    if not seed.elliptic or seed.p2 <= 0:
        raise NotEllipticError(f"quadratic seed must have p2 > 0 and p2 q2 - qp^2 > 0, got casimir {seed.casimir:.3g}")
    return seed


def check_times(times, lo: float, hi: float) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    if t[0] < lo - 1e-12 or t[-1] > hi + 1e-12:
        raise ValueError(f"times must lie in [{lo}, {hi}]")
    return t
