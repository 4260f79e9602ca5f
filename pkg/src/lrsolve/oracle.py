"""Split-step Fourier reference propagator.

Integrates ``i dpsi/dt = [p^2/2m + f(t) q + m w(t)^2 q^2 / 2] psi`` with
Strang splitting (half kinetic, full potential at the midpoint time, half
kinetic).  Nothing here uses the invariant construction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .gridstates import Grid, Trajectory, Wavefunction, inner


class BoundaryContactError(RuntimeError):
    """Probability leaked out of the interior window of the grid."""


@dataclass(frozen=True)
class PropagatorConfig:
    dt: float = 1e-4
    damping_width: float = 0.0
    interior_fraction: float = 0.8
    mass_guard: float = 1e-6

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 <= self.damping_width <= 0.5 * (1 - self.interior_fraction):
            raise ValueError("damping mask must leave the interior window untouched")


def damping_mask(grid: Grid, width_fraction: float) -> np.ndarray:
    """cos^(1/8) absorber on the outer ``width_fraction`` of each side."""
    mask = np.ones(grid.n_points)
    if width_fraction <= 0:
        return mask
    x = np.abs(grid.nodes)
    edge = grid.half_width * (1 - 2 * width_fraction)
    outer = x > edge
    s = (x[outer] - edge) / (grid.half_width - edge)
    mask[outer] = np.abs(np.cos(0.5 * np.pi * s)) ** 0.125
    return mask


def interior_mass(psi: Wavefunction, fraction: float = 0.8) -> float:
    inside = np.abs(psi.q) <= fraction * psi.grid.half_width
    a = np.abs(psi.amplitudes) ** 2
    return float(a[inside].sum() / a.sum())


def propagate(psi0: Wavefunction, scenario, record_times: Sequence[float], config: PropagatorConfig | None = None, t0: float | None = None) -> Trajectory:
    """Evolve ``psi0`` from ``t0`` (default ``scenario.t0``) through ``record_times``.

    Between consecutive records the step is shrunk so each interval is hit
    exactly.  ``record_times`` may run backwards for time-reversal checks.
    """
    return propagate_many([psi0], scenario, record_times, config, t0)[0]


def propagate_many(psis: Sequence[Wavefunction], scenario, record_times: Sequence[float], config: PropagatorConfig | None = None, t0: float | None = None) -> list[Trajectory]:
    """:func:`propagate` for several initial states on one grid, advanced together."""
    cfg = config or PropagatorConfig()
    grid = psis[0].grid
    if any(p.grid != grid for p in psis):
        raise ValueError("all initial states must share one grid")
    m = scenario.mass
    x = grid.nodes
    k2 = grid.wavenumbers**2
    mask = damping_mask(grid, cfg.damping_width)
    damp = cfg.damping_width > 0
    t = scenario.t0 if t0 is None else t0
    psi = np.array([p.amplitudes for p in psis])
    times: list[float] = []
    states: list[list[Wavefunction]] = [[] for _ in psis]
    kin_cache: dict[float, np.ndarray] = {}

    def potential(s: float) -> np.ndarray:
        v = scenario.drive(s) * x
        if scenario.omega is not None:
            v = v + 0.5 * m * scenario.omega(s) ** 2 * x * x
        return v

    for target in record_times:
        span = target - t
        n = max(1, math.ceil(abs(span) / cfg.dt - 1e-9)) if span != 0 else 0
        h = span / n if n else 0.0
        if n:
            kin = kin_cache.get(h)
            if kin is None:
                kin = kin_cache[h] = np.exp(-0.5j * h * k2 / (2 * m))
        for i in range(n):
            tm = t + (i + 0.5) * h
            psi = np.fft.ifft(kin * np.fft.fft(psi, axis=-1), axis=-1)
            psi *= np.exp(-1j * h * potential(tm))
            psi = np.fft.ifft(kin * np.fft.fft(psi, axis=-1), axis=-1)
            if damp:
                psi *= mask
        t = target
        times.append(t)
        for row, bucket in zip(psi, states):
            state = Wavefunction(row, grid)
            if not damp:
                frac = interior_mass(state, cfg.interior_fraction)
                if frac < 1 - cfg.mass_guard:
                    raise BoundaryContactError(f"interior mass fraction {frac:.10f} at t={t:g} fell below 1 - {cfg.mass_guard:g}")
            bucket.append(state)
    tt = np.array(times, dtype=float)
    return [Trajectory(tt, tuple(b)) for b in states]


@dataclass(frozen=True)
class FidelitySeries:
    times: np.ndarray
    fidelity: np.ndarray
    phase: np.ndarray

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "fidelity", "phase_error"])
            for row in zip(self.times, self.fidelity, self.phase):
                w.writerow([f"{v:.17g}" for v in row])


def fidelity_series(analytic: Trajectory, numeric: Trajectory) -> FidelitySeries:
    """Per-time ``|<a|b>|`` and ``arg <a|b>`` of the normalised states."""
    if len(analytic) != len(numeric) or not np.allclose(analytic.times, numeric.times, rtol=0, atol=1e-12):
        raise ValueError("time grids of the two series do not match")
    fid, ph = [], []
    for a, b in zip(analytic.states, numeric.states):
        ov = inner(a.normalized(), b.normalized())
        fid.append(abs(ov))
        ph.append(np.angle(ov))
    return FidelitySeries(analytic.times.copy(), np.array(fid), np.array(ph))


def moments(psi: Wavefunction, scenario=None, t: float | None = None) -> dict[str, float]:
    """Norm, <q>, <p>, Var q and (if a scenario is given) <H> at time t."""
    a = psi.amplitudes
    dx = psi.grid.dx
    x = psi.q
    k = psi.grid.wavenumbers
    norm2 = float(np.sum(np.abs(a) ** 2) * dx)
    pa = np.fft.ifft(k * np.fft.fft(a))
    q_mean = float(np.sum(x * np.abs(a) ** 2) * dx / norm2)
    p_mean = float(np.real(np.vdot(a, pa)) * dx / norm2)
    q_var = float(np.sum((x - q_mean) ** 2 * np.abs(a) ** 2) * dx / norm2)
    out = {"norm": math.sqrt(norm2), "q_mean": q_mean, "p_mean": p_mean, "q_var": q_var}
    if scenario is not None:
        kin = float(np.sum(k**2 * np.abs(np.fft.fft(a)) ** 2) * dx / psi.grid.n_points / norm2) / (2 * scenario.mass)
        v = scenario.drive(t) * x
        if scenario.omega is not None:
            v = v + 0.5 * scenario.mass * scenario.omega(t) ** 2 * x * x
        out["energy"] = kin + float(np.sum(v * np.abs(a) ** 2) * dx / norm2)
    return out


def write_moments_csv(path: str | Path, traj: Trajectory, scenario) -> None:
    cols = ["t", "norm", "q_mean", "p_mean", "q_var", "energy"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for t, st in zip(traj.times, traj.states):
            m = moments(st, scenario, t)
            w.writerow([f"{t:.17g}"] + [f"{m[c]:.17g}" for c in cols[1:]])
