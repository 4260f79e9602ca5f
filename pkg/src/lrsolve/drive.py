"""Time-dependent drive functions f(t) and stiffness w(t)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

KINDS = ("constant", "linear-ramp", "sinusoid", "tabulated")


@dataclass(frozen=True)
class DriveSpec:
    """Scalar function of time.

    constant:     amplitude
    linear-ramp:  amplitude + slope * t
    sinusoid:     amplitude * sin(frequency * t + phase)
    tabulated:    piecewise-linear through (times, values)
    """

    kind: str = "constant"
    amplitude: float = 0.0
    slope: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0
    times: tuple[float, ...] = field(default=())
    values: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown drive kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "tabulated":
            t = np.asarray(self.times, dtype=float)
            if len(t) < 2 or len(t) != len(self.values):
                raise ValueError("tabulated drive needs matching times/values with >= 2 samples")
            if np.any(np.diff(t) <= 0):
                raise ValueError("tabulated drive times must be strictly increasing")

    def __call__(self, t: float) -> float:
        if self.kind == "constant":
            return self.amplitude
        if self.kind == "linear-ramp":
            return self.amplitude + self.slope * t
        if self.kind == "sinusoid":
            return self.amplitude * np.sin(self.frequency * t + self.phase)
        if not (self.times[0] - 1e-12 <= t <= self.times[-1] + 1e-12):
            raise ValueError(f"t={t} outside tabulated drive window [{self.times[0]}, {self.times[-1]}]")
        return float(np.interp(t, self.times, self.values))

    @property
    def is_zero(self) -> bool:
        if self.kind == "tabulated":
            return not np.any(self.values)
        return self.amplitude == 0.0 and (self.kind != "linear-ramp" or self.slope == 0.0)

    def integral(self, t: float, t0: float = 0.0) -> float:
        """``int_t0^t f`` by adaptive quadrature."""
        if t == t0:
            return 0.0
        points = None
        if self.kind == "tabulated":
            lo, hi = sorted((t0, t))
            points = [s for s in self.times if lo < s < hi] or None
        val, _ = quad(self, t0, t, points=points, epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    @classmethod
    def zero(cls) -> "DriveSpec":
        return cls("constant", 0.0)
