"""Scenario description and its flat dotted-key file format.

A scenario file is TOML restricted to dotted scalar keys, e.g.::

    name = "constant_force"
    mass = 1.0
    drive.kind = "constant"
    drive.amplitude = 0.5
    grid.n_points = 1024
    quad_seed.p2 = 1.0
    tol.particular_fidelity = 1e-5

Unknown keys are rejected.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .drive import DriveSpec
from .gridstates import Grid
from .invariants import LinearCoeffs, QuadCoeffs

DEFAULT_TOLERANCES = {
    "algebra_span": 1e-9,
    "ode_residual": 1e-7,
    "casimir_drift": 1e-10,
    "linear_terms": 1e-12,
    "reduction": 1e-9,
    "level_spacing": 1e-10,
    "eigen_residual": 1e-7,
    "particular_fidelity": 1e-5,
    "phase_error": 1e-4,
    "phase_affinity": 1e-8,
    "general_t0_fidelity": 1e-8,
    "general_fidelity": 1e-4,
    "truncation_loss": 1e-6,
    "invariant_drift": 1e-6,
    "volkov_eigen": 1e-8,
    "volkov_tdse": 1e-6,
    "cross_fidelity": 1e-4,
    "orthonormality": 1e-8,
    "norm_drift": 1e-10,
    "phase_imag": 1e-9,
    "spacing_drift": 1e-9,
    "general_norm": 1e-8,
    "ehrenfest": 1e-5,
    "time_reversal": 1e-9,
    "periodicity": 1e-8,
    "free_flight": 1e-10,
}

BUNDLED = ("constant_force", "free_particle", "sinusoidal_drive")


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario configuration."""


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    mass: float = 1.0
    drive: DriveSpec = field(default_factory=DriveSpec.zero)
    omega: DriveSpec | None = None
    t0: float = 0.0
    t1: float = 1.0
    dt_record: float = 0.02
    grid: Grid = field(default_factory=Grid)
    quad_seed: QuadCoeffs = field(default_factory=QuadCoeffs)
    linear_seed: LinearCoeffs = field(default_factory=lambda: LinearCoeffs(1.0, 0.0, 0.0))
    n_max: int = 64
    n_particular: int = 10
    path_step: float = 1e-3
    oracle_dt: float = 1e-4
    phase_dt: float = 1e-4
    coherent_shift: float = 1.0
    seed: int = 0
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def __post_init__(self):
        for name in ("mass", "t0", "t1", "dt_record", "path_step", "oracle_dt", "phase_dt", "coherent_shift"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ScenarioError(f"{name} must be a finite number, got {v!r}")
        if self.mass <= 0:
            raise ScenarioError("mass must be positive")
        if self.t1 < self.t0:
            raise ScenarioError("t1 must not precede t0")
        for name in ("dt_record", "path_step", "oracle_dt", "phase_dt"):
            if getattr(self, name) <= 0:
                raise ScenarioError(f"{name} must be positive")
        if not 0 <= self.n_particular <= self.n_max:
            raise ScenarioError("n_particular must lie in [0, n_max]")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ScenarioError(f"unknown tolerance keys: {sorted(unknown)}")

    @property
    def harmonic(self) -> bool:
        return self.omega is not None and not self.omega.is_zero

    @property
    def record_times(self):
        import numpy as np

        n = max(1, round((self.t1 - self.t0) / self.dt_record))
        return self.t0 + (self.t1 - self.t0) * np.arange(n + 1) / n

    def tol(self, key: str) -> float:
        return self.tolerances[key]

    def scaled(self, factor: float) -> "Scenario":
        return replace(self, tolerances={k: v * factor for k, v in self.tolerances.items()})

    def to_flat(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "name": self.name,
            "mass": self.mass,
            "t0": self.t0,
            "t1": self.t1,
            "dt_record": self.dt_record,
            "n_max": self.n_max,
            "n_particular": self.n_particular,
            "path.step": self.path_step,
            "oracle.dt": self.oracle_dt,
            "phase.dt": self.phase_dt,
            "coherent_shift": self.coherent_shift,
            "seed": self.seed,
            "grid.n_points": self.grid.n_points,
            "grid.half_width": self.grid.half_width,
        }
        for prefix, spec in (("drive", self.drive), ("omega", self.omega)):
            if spec is None:
                continue
            for k in _DRIVE_KEYS:
                v = getattr(spec, k)
                out[f"{prefix}.{k}"] = list(v) if isinstance(v, tuple) else v
        for k in ("p2", "qp", "q2", "p1", "q1", "c0"):
            out[f"quad_seed.{k}"] = getattr(self.quad_seed, k)
        for k in ("p1", "q1", "c0"):
            out[f"linear_seed.{k}"] = getattr(self.linear_seed, k)
        for k, v in self.tolerances.items():
            out[f"tol.{k}"] = v
        return out


_DRIVE_KEYS = ("kind", "amplitude", "slope", "frequency", "phase", "times", "values")
_TOP_KEYS = {
    "name": "name",
    "mass": "mass",
    "t0": "t0",
    "t1": "t1",
    "dt_record": "dt_record",
    "n_max": "n_max",
    "n_particular": "n_particular",
    "path.step": "path_step",
    "oracle.dt": "oracle_dt",
    "phase.dt": "phase_dt",
    "coherent_shift": "coherent_shift",
    "seed": "seed",
}


def _flatten(d: dict, prefix: str = "") -> dict[str, Any]:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def from_flat(flat: dict[str, Any]) -> Scenario:
    kw: dict[str, Any] = {}
    drives: dict[str, dict[str, Any]] = {"drive": {}, "omega": {}}
    grid: dict[str, Any] = {}
    quad: dict[str, float] = {}
    lin: dict[str, float] = {}
    tols = dict(DEFAULT_TOLERANCES)
    for key, val in flat.items():
        head, _, tail = key.partition(".")
        if key in _TOP_KEYS:
            kw[_TOP_KEYS[key]] = val
        elif head in drives and tail in _DRIVE_KEYS:
            drives[head][tail] = tuple(float(x) for x in val) if tail in ("times", "values") else val
        elif head == "grid" and tail in ("n_points", "half_width"):
            grid[tail] = val
        elif head == "quad_seed" and tail in ("p2", "qp", "q2", "p1", "q1", "c0"):
            quad[tail] = float(val)
        elif head == "linear_seed" and tail in ("p1", "q1", "c0"):
            lin[tail] = float(val)
        elif head == "tol" and tail in DEFAULT_TOLERANCES:
            tols[tail] = float(val)
        else:
            raise ScenarioError(f"unknown scenario key {key!r}")
    for name in ("mass", "t0", "t1", "dt_record", "path_step", "oracle_dt", "phase_dt", "coherent_shift"):
        if name in kw:
            kw[name] = float(kw[name])
    try:
        if drives["drive"]:
            kw["drive"] = DriveSpec(**drives["drive"])
        if drives["omega"]:
            kw["omega"] = DriveSpec(**drives["omega"])
        if grid:
            kw["grid"] = Grid(int(grid.get("n_points", 1024)), float(grid.get("half_width", 20.0)))
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc)) from exc
    if quad:
        kw["quad_seed"] = QuadCoeffs(**{**QuadCoeffs().__dict__, **quad})
    if lin:
        kw["linear_seed"] = LinearCoeffs(**{**LinearCoeffs(1.0, 0.0, 0.0).__dict__, **lin})
    kw["tolerances"] = tols
    return Scenario(**kw)


def loads(text: str) -> Scenario:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"cannot parse scenario: {exc}") from exc
    return from_flat(_flatten(data))


def load(path: str | Path) -> Scenario:
    return loads(Path(path).read_text(encoding="utf-8"))


def bundled(name: str) -> Scenario:
    if name not in BUNDLED:
        raise ScenarioError(f"no bundled scenario {name!r}; choose from {BUNDLED}")
    text = resources.files("lrsolve.scenarios").joinpath(f"{name}.toml").read_text(encoding="utf-8")
    return loads(text)


def resolve(spec: str) -> Scenario:
    """A file path, or the name of a bundled scenario."""
    if spec in BUNDLED and not Path(spec).exists():
        return bundled(spec)
    return load(spec)
