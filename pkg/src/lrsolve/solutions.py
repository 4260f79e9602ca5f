"""Schrodinger solutions built from invariant eigenstates.

Quadratic branch: ``chi_n(t) = V(t) |n>`` is an eigenstate of the
quadratic invariant, ``exp(-i phase_n(t)) chi_n(t)`` solves the TDSE with

    phase_n(t) = int_t0^t  <chi_n| H |chi_n> - i <chi_n| d/dt' chi_n>  dt'

and any solution is a constant-coefficient superposition of these.

Linear branch: plane waves with drifting momentum ``k - F(t)``,
``F(t) = int_t0^t f``, eigenstates of ``p + F(t)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, quad
from scipy.interpolate import CubicHermiteSpline
from scipy.special import erf

from . import weyl
from .gridstates import (
    Grid,
    Trajectory,
    Wavefunction,
    apply_operator_poly,
    apply_p_power,
    apply_transform,
    hermite_state,
    inner,
)
from .invariants import CoefficientPath, materialize
from .oracle import PropagatorConfig, fidelity_series, propagate
from .transforms import TransformParams, transform_at


class PhaseError(ArithmeticError):
    """The phase integrand is not real (broken unitarity or coarse differencing)."""


class TruncationError(ValueError):
    pass


@lru_cache(maxsize=512)
def _basis_state(n: int, grid: Grid) -> Wavefunction:
    return hermite_state(n, grid, n_max=max(n, 64))


def transform_sequence(path: CoefficientPath, times: Sequence[float]) -> list[TransformParams]:
    """V parameters along ``times``, each seeded by its predecessor so the branch is continuous."""
    out: list[TransformParams] = []
    prev = None
    for t in times:
        prev = transform_at(path, float(t), guess=prev)
        out.append(prev)
    return out


def eigenstate(path: CoefficientPath, n: int, t: float, grid: Grid, guess: TransformParams | None = None) -> tuple[Wavefunction, TransformParams]:
    """``V(t)|n>`` and the parameters used."""
    params = transform_at(path, t, guess=guess)
    return apply_transform(_basis_state(n, grid), params), params


def _hamiltonian(scenario, t: float) -> weyl.OperatorPoly:
    w = scenario.omega(t) if scenario.omega is not None else 0.0
    return weyl.hamiltonian(scenario.mass, scenario.drive(t), w)


_FORWARD4 = (np.arange(5.0), np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0)


def _stencil(t: float, delta: float, lo: float, hi: float) -> tuple[list[float], list[float], int]:
    """First-derivative stencil inside [lo, hi]: (offsets, weights, order).

    Central second order in the interior, one-sided fourth order at the ends.
    """
    if t - delta >= lo - 1e-12 and t + delta <= hi + 1e-12:
        return [-delta, delta], [-0.5 / delta, 0.5 / delta], 2
    sign = -1.0 if t - 4 * delta >= lo - 1e-12 else 1.0
    offs, wts = _FORWARD4
    return list(sign * delta * offs), list(sign * wts / delta), 4


def _richardson(coarse, fine, order: int):
    f = 2.0**order
    return (f * fine - coarse) / (f - 1.0)


@dataclass(frozen=True)
class PhaseTable:
    times: np.ndarray
    n_list: tuple[int, ...]
    phase: np.ndarray
    rate: np.ndarray
    max_imag_residue: float = 0.0

    def row(self, n: int) -> np.ndarray:
        return self.phase[self.n_list.index(n)]

    def at(self, n: int, t: float) -> float:
        """phase_n(t), Hermite-interpolated between samples with the exact rate."""
        i = self.n_list.index(n)
        if not (self.times[0] - 1e-12 <= t <= self.times[-1] + 1e-12):
            raise ValueError(f"t={t} outside phase table window")
        j = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[j] - t) < 1e-12:
            return float(self.phase[i, j])
        return float(CubicHermiteSpline(self.times, self.phase[i], self.rate[i])(t))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "n", "phase"])
            for i, n in enumerate(self.n_list):
                for t, ph in zip(self.times, self.phase[i]):
                    w.writerow([f"{t:.17g}", n, f"{ph:.17g}"])


def accumulated_phase(
    path: CoefficientPath,
    n_list: Sequence[int],
    t_grid: Sequence[float],
    scenario,
    delta: float | None = None,
    imag_tol: float = 1e-9,
    params: Sequence[TransformParams] | None = None,
) -> PhaseTable:
    """Total phase ``phase_n`` on ``t_grid`` by Simpson quadrature of the integrand.

    The time derivative of ``chi_n`` is a second-order difference at steps
    ``delta`` and ``delta/2`` combined by Richardson extrapolation.
    """
    times = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    delta = scenario.phase_dt if delta is None else delta
    grid = scenario.grid
    n_list = tuple(int(n) for n in n_list)
    seq = list(params) if params is not None else transform_sequence(path, times)
    rate = np.zeros((len(n_list), len(times)))
    worst = 0.0
    for j, t in enumerate(times):
        H = _hamiltonian(scenario, t)
        nbr: dict[float, TransformParams] = {}
        stencils = [_stencil(t, h, path.t0, path.t1) for h in (delta, 0.5 * delta)]
        for offs, _, _ in stencils:
            for o in offs:
                if o != 0.0 and o not in nbr:
                    nbr[o] = transform_at(path, t + o, guess=seq[j])
        nbr[0.0] = seq[j]
        for i, n in enumerate(n_list):
            base = _basis_state(n, grid)
            states = {o: apply_transform(base, prm) for o, prm in nbr.items()}
            chi = states[0.0]
            derivs = []
            for offs, wts, _ in stencils:
                d = sum(w * states[o].amplitudes for o, w in zip(offs, wts))
                derivs.append(np.vdot(chi.amplitudes, d) * grid.dx)
            berry = _richardson(derivs[0], derivs[1], stencils[0][2])
            energy = inner(chi, apply_operator_poly(H, chi))
            val = energy - 1j * berry
            worst = max(worst, abs(val.imag))
            if abs(val.imag) > imag_tol:
                raise PhaseError(f"phase integrand for n={n} at t={t:g} has imaginary part {val.imag:.3g}")
            rate[i, j] = val.real
    if len(times) == 1:
        phase = np.zeros((len(n_list), 1))
    elif len(times) == 2:
        phase = np.concatenate([np.zeros((len(n_list), 1)), 0.5 * (rate[:, :1] + rate[:, 1:]) * np.diff(times)], axis=1)
    else:
        phase = cumulative_simpson(rate, x=times, axis=1, initial=0.0)
    return PhaseTable(times, n_list, phase, rate, worst)


@dataclass(frozen=True)
class ParticularSolution:
    n: int
    eigenvalue: float
    trajectory: Trajectory
    phase: PhaseTable
    params: tuple[TransformParams, ...]

    @property
    def snapshots(self) -> tuple[Wavefunction, ...]:
        return self.trajectory.states

    @property
    def times(self) -> np.ndarray:
        return self.trajectory.times


def particular_solution(path: CoefficientPath, n: int, t_grid: Sequence[float], scenario, phase: PhaseTable | None = None) -> ParticularSolution:
    """Snapshots of ``exp(-i phase_n) V |n>`` on ``t_grid``."""
    times = np.asarray(t_grid, dtype=float)
    seq = transform_sequence(path, times)
    if phase is None or n not in phase.n_list:
        phase = accumulated_phase(path, [n], times, scenario, params=seq)
    base = _basis_state(n, scenario.grid)
    phases = phase.row(n)
    snaps = tuple(apply_transform(base, prm) * np.exp(-1j * ph) for prm, ph in zip(seq, phases))
    return ParticularSolution(n, seq[0].eigenvalue(n), Trajectory(times, snaps), phase, tuple(seq))


@dataclass(frozen=True)
class GeneralSolution:
    coefficients: np.ndarray
    n_list: tuple[int, ...]
    truncation_loss: float
    path: CoefficientPath
    scenario: object
    phase: PhaseTable | None = None
    params: tuple[TransformParams, ...] = field(default=())

    def component(self, n: int) -> ParticularSolution:
        return particular_solution(self.path, n, self.phase.times, self.scenario, phase=self.phase)

    @property
    def components(self) -> list[ParticularSolution]:
        return [self.component(n) for n in self.n_list]

    def active(self, cutoff: float = 1e-14) -> list[int]:
        return [n for n, c in zip(self.n_list, self.coefficients) if abs(c) > cutoff]


def expand_initial(
    psi0: Wavefunction,
    path: CoefficientPath,
    n_max: int,
    scenario,
    t_grid: Sequence[float] | None = None,
    max_loss: float = 1e-6,
) -> GeneralSolution:
    """``c_n = <n| V^dagger(t0) |psi0>`` for ``n <= n_max``.

    Phases are tabulated on ``t_grid`` (default: the scenario record times)
    for every ``n`` with a non-negligible coefficient.
    """
    params0 = transform_at(path, path.t0)
    coeffs = np.array([inner(apply_transform(_basis_state(n, psi0.grid), params0), psi0) for n in range(n_max + 1)])
    loss = float(psi0.norm() ** 2 - np.sum(np.abs(coeffs) ** 2))
    if loss > max_loss:
        raise TruncationError(f"truncation loss {loss:.3g} exceeds {max_loss:g} with n_max={n_max}")
    gs = GeneralSolution(coeffs, tuple(range(n_max + 1)), loss, path, scenario)
    times = np.asarray(scenario.record_times if t_grid is None else t_grid, dtype=float)
    seq = transform_sequence(path, times)
    phase = accumulated_phase(path, gs.active(), times, scenario, params=seq)
    return GeneralSolution(coeffs, gs.n_list, loss, path, scenario, phase, tuple(seq))


def evolve_general(gs: GeneralSolution, t: float) -> Wavefunction:
    """``sum_n c_n exp(-i phase_n(t)) V(t)|n>``."""
    times = gs.phase.times
    if not (times[0] - 1e-12 <= t <= times[-1] + 1e-12):
        raise ValueError(f"t={t} outside the solution window")
    j = int(np.argmin(np.abs(times - t)))
    if abs(times[j] - t) < 1e-12:
        params = gs.params[j]
    else:
        params = transform_at(gs.path, t, guess=gs.params[j])
    grid = gs.scenario.grid
    acc = np.zeros(grid.n_points, dtype=complex)
    for n in gs.active():
        c = gs.coefficients[n]
        acc += c * np.exp(-1j * gs.phase.at(n, t)) * _basis_state(n, grid).amplitudes
    # V is linear: apply it once to the phased superposition of basis states
    return apply_transform(Wavefunction(acc, grid), params)


def general_trajectory(gs: GeneralSolution) -> Trajectory:
    return Trajectory(gs.phase.times.copy(), tuple(evolve_general(gs, t) for t in gs.phase.times))


def eigen_residual(path: CoefficientPath, sol: ParticularSolution) -> np.ndarray:
    """``||I(t) psi - lambda psi|| / ||psi||`` at every snapshot."""
    out = []
    for t, psi in zip(sol.times, sol.snapshots):
        r = apply_operator_poly(materialize(path, t), psi) - psi * sol.eigenvalue
        out.append(r.norm() / psi.norm())
    return np.array(out)


# linear branch


def drift_momentum(scenario, t: float) -> float:
    """``F(t) = int_t0^t f``."""
    return scenario.drive.integral(t, scenario.t0)


def volkov_phase(k: float, t: float, scenario) -> float:
    """``int_t0^t (k - F(s))^2 / 2m ds``."""
    if t == scenario.t0:
        return 0.0
    val, _ = quad(lambda s: (k - drift_momentum(scenario, s)) ** 2, scenario.t0, t, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val / (2 * scenario.mass)


def _require_linear(scenario) -> None:
    if scenario.harmonic:
        raise ValueError("Volkov states need a purely linear potential (no harmonic term)")


def volkov_state(k: float, t: float, scenario, grid: Grid | None = None) -> Wavefunction:
    """``exp{i[(k - F_t) q - int (k - F)^2/2m]}`` sampled on the grid (delta-normalised)."""
    _require_linear(scenario)
    grid = grid or scenario.grid
    F = drift_momentum(scenario, t)
    return Wavefunction(np.exp(1j * ((k - F) * grid.nodes - volkov_phase(k, t, scenario))), grid)


def interior_window(grid: Grid, reach: float = 0.7, soft: float = 1.0) -> np.ndarray:
    """Smooth flat-top window, 1 to machine precision for |q| < reach*L - 6*soft."""
    a = reach * grid.half_width
    x = grid.nodes
    return 0.5 * (erf((x + a) / soft) - erf((x - a) / soft))


def volkov_residuals(k: float, t: float, scenario, grid: Grid | None = None, delta: float | None = None, interior: float = 0.4) -> dict[str, float]:
    """Max pointwise residuals of ``(p + F) psi = k psi`` and ``(i d/dt - H) psi = 0``.

    Spatial derivatives act on the windowed wave; residuals are read on
    ``|q| <= interior * L`` where the window is exactly flat.
    """
    _require_linear(scenario)
    grid = grid or scenario.grid
    delta = scenario.phase_dt if delta is None else delta
    win = interior_window(grid)
    inside = np.abs(grid.nodes) <= interior * grid.half_width
    psi = volkov_state(k, t, scenario, grid)
    windowed = Wavefunction(win * psi.amplitudes, grid)
    F = drift_momentum(scenario, t)
    p_psi = apply_p_power(windowed, 1)
    eig = np.abs(p_psi + F * psi.amplitudes - k * psi.amplitudes)[inside].max()

    def ddt(h: float) -> tuple[np.ndarray, int]:
        offs, wts, order = _stencil(t, h, scenario.t0, np.inf)
        return sum(w * volkov_state(k, t + o, scenario, grid).amplitudes for o, w in zip(offs, wts)), order

    (coarse, order), (fine, _) = ddt(delta), ddt(0.5 * delta)
    dpsi = _richardson(coarse, fine, order)
    h_psi = apply_p_power(windowed, 2) / (2 * scenario.mass) + scenario.drive(t) * grid.nodes * psi.amplitudes
    tdse = np.abs(1j * dpsi - h_psi)[inside].max()
    return {"eigen": float(eig), "tdse": float(tdse)}


@dataclass(frozen=True)
class CrossCheck:
    times: np.ndarray
    fidelity: np.ndarray
    norm_ratio: np.ndarray

    @property
    def min_fidelity(self) -> float:
        return float(self.fidelity.min())


def cross_invariant_solution(
    solution: ParticularSolution,
    linear_path: CoefficientPath,
    scenario,
    power: int = 1,
    config: PropagatorConfig | None = None,
) -> CrossCheck:
    """Apply ``I_l(t)^power`` to every snapshot and compare with oracle evolution of the first slice."""
    times = solution.times
    images = []
    for t, psi in zip(times, solution.snapshots):
        op = materialize(linear_path, t) ** power
        images.append(apply_operator_poly(op, psi))
    first = images[0]
    if first.norm() < 1e-12 * solution.snapshots[0].norm():
        raise ValueError("the linear invariant annihilates this solution")
    numeric = propagate(first, scenario, times, config or PropagatorConfig(dt=scenario.oracle_dt), t0=float(times[0]))
    fs = fidelity_series(Trajectory(times, tuple(images)), numeric)
    ratio = np.array([im.norm() / first.norm() for im in images])
    return CrossCheck(times.copy(), fs.fidelity, ratio)


def orthonormality_error(solutions: Sequence[ParticularSolution]) -> float:
    """Max deviation of ``<m;t|n;t>`` from the identity over all shared times."""
    worst = 0.0
    for j in range(len(solutions[0].times)):
        for a, sa in enumerate(solutions):
            for b, sb in enumerate(solutions):
                if b < a:
                    continue
                v = inner(sa.snapshots[j], sb.snapshots[j])
                worst = max(worst, abs(v - (1.0 if a == b else 0.0)))
    return worst
