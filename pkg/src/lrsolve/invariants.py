"""Coefficient flows of the linear and quadratic invariants.

For ``H = p^2/2m + f(t) q + m w(t)^2 q^2 / 2`` the invariant ansatz
``I = sum_k c_k(t) b_k`` over a Hermitian basis ``b_k`` obeys ``dc/dt = M(t) c``.
``M(t)`` is assembled from brackets computed by :mod:`lrsolve.weyl`; nothing
here is hand-derived.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import weyl
from .drive import DriveSpec
from .weyl import OperatorPoly

FAMILIES = {"linear": weyl.LINEAR_BASIS, "quadratic": weyl.QUADRATIC_BASIS}


class ConvergenceError(RuntimeError):
    """Fixed-step integration failed its half-step self-check."""


@dataclass(frozen=True)
class LinearCoeffs:
    """``p1 p + q1 q + c0``."""

    p1: float = 0.0
    q1: float = 1.0
    c0: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.q1, self.c0], dtype=float)


@dataclass(frozen=True)
class QuadCoeffs:
    """``p2 p^2 + qp (qp + pq) + q2 q^2 + p1 p + q1 q + c0``."""

    p2: float = 1.0
    qp: float = 0.0
    q2: float = 1.0
    p1: float = 0.0
    q1: float = 0.0
    c0: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.p2, self.qp, self.q2, self.p1, self.q1, self.c0], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "QuadCoeffs":
        return cls(*(float(x) for x in arr))

    @property
    def casimir(self) -> float:
        return self.p2 * self.q2 - self.qp**2

    @property
    def elliptic(self) -> bool:
        return self.casimir > 0

    @classmethod
    def square_of(cls, lin: LinearCoeffs) -> "QuadCoeffs":
        """Coefficients of ``(a p + b q + c)^2``."""
        a, b, c = lin.p1, lin.q1, lin.c0
        return cls(a * a, a * b, b * b, 2 * a * c, 2 * b * c, c * c)


@dataclass(frozen=True)
class OdeSystem:
    family: str
    basis: tuple[OperatorPoly, ...]
    mass: float
    drive: DriveSpec
    omega: DriveSpec | None
    kinetic: np.ndarray
    force: np.ndarray
    harmonic: np.ndarray

    def matrix(self, t: float) -> np.ndarray:
        M = self.kinetic + self.drive(t) * self.force
        if self.omega is not None:
            M = M + 0.5 * self.mass * self.omega(t) ** 2 * self.harmonic
        return M

    def __call__(self, t: float, c: np.ndarray) -> np.ndarray:
        return self.matrix(t) @ c

    def hamiltonian(self, t: float) -> OperatorPoly:
        w = 0.0 if self.omega is None else self.omega(t)
        return weyl.hamiltonian(self.mass, self.drive(t), w)


def generate_ode_system(family: str, scenario) -> OdeSystem:
    """Right-hand side ``dc/dt = M(t) c`` for the ``linear`` or ``quadratic`` ansatz."""
    if family not in FAMILIES:
        raise ValueError(f"unknown invariant family {family!r}; expected 'linear' or 'quadratic'")
    basis = FAMILIES[family]
    m = scenario.mass
    kinetic = weyl.lvn_matrix(basis, weyl.p * weyl.p * (0.5 / m))
    force = weyl.lvn_matrix(basis, weyl.q)
    harmonic = weyl.lvn_matrix(basis, weyl.q * weyl.q)
    return OdeSystem(family, basis, m, scenario.drive, scenario.omega, kinetic, force, harmonic)


def _rk4(system: Callable, y0: np.ndarray, t0: float, h: float, n: int):
    ys = np.empty((n + 1, len(y0)))
    ys[0] = y0
    y = y0.astype(float)
    t = t0
    for i in range(n):
        k1 = system(t, y)
        k2 = system(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = system(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = system(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (i + 1) * h
        ys[i + 1] = y
    return ys


@dataclass(frozen=True)
class CoefficientPath:
    family: str
    times: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    system: OdeSystem

    @property
    def casimir(self) -> np.ndarray:
        if self.family != "quadratic":
            raise AttributeError("casimir is defined for quadratic paths only")
        pp, qp, qq = self.values[:, 0], self.values[:, 1], self.values[:, 2]
        return pp * qq - qp**2

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    def at(self, t: float) -> np.ndarray:
        """Coefficients at ``t``; cubic Hermite between nodes using the exact flow slopes."""
        if not (self.t0 - 1e-12 <= t <= self.t1 + 1e-12):
            raise ValueError(f"t={t} outside path window [{self.t0}, {self.t1}]")
        if len(self.times) == 1:
            return self.values[0].copy()
        i = int(np.clip(np.searchsorted(self.times, t) - 1, 0, len(self.times) - 2))
        t_a, t_b = self.times[i], self.times[i + 1]
        if t == t_a:
            return self.values[i].copy()
        spline = CubicHermiteSpline(self.times[i : i + 2], self.values[i : i + 2], self.derivatives[i : i + 2])
        return spline(np.clip(t, t_a, t_b))

    def quad_coeffs(self, t: float) -> QuadCoeffs:
        if self.family != "quadratic":
            raise ValueError("not a quadratic path")
        return QuadCoeffs.from_array(self.at(t))


def integrate(system: OdeSystem, seed, t0: float, t1: float, step: float = 1e-3, rtol: float = 1e-9) -> CoefficientPath:
    """Classical RK4 with a mandatory half-step re-run.

    The two runs must agree at ``t1`` to ``rtol`` (relative to max(1, |c|)),
    otherwise :class:`ConvergenceError` is raised.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    y0 = seed.as_array() if hasattr(seed, "as_array") else np.asarray(seed, dtype=float)
    if len(y0) != len(system.basis):
        raise ValueError(f"seed has {len(y0)} entries, {system.family} family needs {len(system.basis)}")
    if t1 == t0:
        times = np.array([t0])
        return CoefficientPath(system.family, times, y0[None, :].copy(), system(t0, y0)[None, :], system)
    n = max(1, math.ceil((t1 - t0) / step - 1e-9))
    h = (t1 - t0) / n
    ys = _rk4(system, y0, t0, h, n)
    fine = _rk4(system, y0, t0, h / 2, 2 * n)
    scale = max(1.0, float(np.abs(fine[-1]).max()))
    err = float(np.abs(ys[-1] - fine[-1]).max()) / scale
    if err > rtol:
        raise ConvergenceError(f"RK4 half-step check failed: relative discrepancy {err:.3g} > {rtol:g} (step {h:g})")
    times = t0 + h * np.arange(n + 1)
    times[-1] = t1
    derivs = np.array([system(t, y) for t, y in zip(times, ys)])
    return CoefficientPath(system.family, times, ys, derivs, system)


def materialize(path: CoefficientPath, t: float) -> OperatorPoly:
    """The invariant operator at time ``t``."""
    c = path.at(t)
    return sum((b * float(x) for b, x in zip(path.system.basis, c)), OperatorPoly())
