"""Wavefunctions on a uniform periodic grid.

Momentum is ``p = -i d/dq`` evaluated spectrally with the FFT.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .weyl import OperatorPoly

N_MAX_DEFAULT = 64
EDGE_TOL = 1e-10
ALIAS_TOL = 1e-8


class AliasingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Grid:
    n_points: int = 1024
    half_width: float = 20.0

    def __post_init__(self):
        n = self.n_points
        if n < 2 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two, got {n}")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @cached_property
    def nodes(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.n_points)

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)

    @property
    def k_max(self) -> float:
        return np.pi / self.dx


@dataclass(frozen=True, eq=False)
class Wavefunction:
    amplitudes: np.ndarray
    grid: Grid

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex)
        if amp.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} amplitudes, got shape {amp.shape}")
        if not np.all(np.isfinite(amp)):
            raise ValueError("wavefunction has non-finite amplitudes")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def q(self) -> np.ndarray:
        return self.grid.nodes

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx))

    def normalized(self) -> "Wavefunction":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("cannot normalize the zero state")
        return self.__class__(self.amplitudes / n, self.grid)

    def momentum_amplitudes(self) -> np.ndarray:
        """Unitary-normalised FFT coefficients (Parseval: sum |c|^2 = norm^2)."""
        return np.fft.fft(self.amplitudes) * np.sqrt(self.grid.dx / self.grid.n_points)

    def __add__(self, other: "Wavefunction") -> "Wavefunction":
        _same_grid(self, other)
        return Wavefunction(self.amplitudes + other.amplitudes, self.grid)

    def __sub__(self, other: "Wavefunction") -> "Wavefunction":
        _same_grid(self, other)
        return Wavefunction(self.amplitudes - other.amplitudes, self.grid)

    def __mul__(self, c) -> "Wavefunction":
        return Wavefunction(self.amplitudes * c, self.grid)

    __rmul__ = __mul__

    def edge_fraction(self) -> float:
        """Largest |psi| at the two outermost nodes relative to max |psi|."""
        a = np.abs(self.amplitudes)
        return float(max(a[0], a[-1]) / max(a.max(), 1e-300))

    def spectral_tail(self) -> float:
        """Fraction of the norm carried by |k| above 2/3 of the Nyquist wavenumber."""
        c = np.abs(np.fft.fft(self.amplitudes)) ** 2
        mask = np.abs(self.grid.wavenumbers) > (2.0 / 3.0) * self.grid.k_max
        return float(np.sqrt(c[mask].sum() / max(c.sum(), 1e-300)))

    def to_csv(self, path: str | Path) -> None:
        write_snapshot_csv(path, self)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: tuple[Wavefunction, ...]

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, i: int) -> Wavefunction:
        return self.states[i]

    def at(self, t: float) -> Wavefunction:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9:
            raise KeyError(f"time {t} was not recorded")
        return self.states[i]


def _same_grid(a: Wavefunction, b: Wavefunction) -> None:
    if a.grid != b.grid:
        raise ValueError("wavefunctions live on different grids")


def inner(a: Wavefunction, b: Wavefunction) -> complex:
    """``<a|b>`` by the periodic trapezoid rule."""
    _same_grid(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.grid.dx)


def fidelity(a: Wavefunction, b: Wavefunction) -> float:
    return abs(inner(a, b)) / (a.norm() * b.norm())


def hermite_state(n: int, grid: Grid, n_max: int = N_MAX_DEFAULT) -> Wavefunction:
    """Normalised n-th eigenfunction of ``(p^2 + q^2)/2``.

    Built with the normalised three-term recurrence
    ``psi_{k+1} = sqrt(2/(k+1)) q psi_k - sqrt(k/(k+1)) psi_{k-1}``;
    positive for large positive q.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > n_max:
        raise ValueError(f"n={n} exceeds n_max={n_max}")
    x = grid.nodes
    prev = np.zeros_like(x)
    cur = np.pi**-0.25 * np.exp(-0.5 * x * x)
    for k in range(n):
        prev, cur = cur, np.sqrt(2.0 / (k + 1)) * x * cur - np.sqrt(k / (k + 1)) * prev
    psi = Wavefunction(cur.astype(complex), grid)
    turning = np.sqrt(2 * n + 1)
    if turning >= grid.half_width or turning >= grid.k_max or psi.edge_fraction() > EDGE_TOL or psi.spectral_tail() > EDGE_TOL:
        raise ValueError(f"grid (n_points={grid.n_points}, L={grid.half_width}) does not resolve state n={n}")
    return psi


def _fft_multiply(psi: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    return np.fft.ifft(symbol * np.fft.fft(psi))


UNITARY_KINDS = ("translate_q", "boost_p", "chirp_q2", "chirp_p2")


def apply_gaussian_unitary(psi: Wavefunction, kind: str, parameter: float) -> Wavefunction:
    """Apply ``exp(i s G)`` with ``G`` = p, q, q^2 or p^2.

    translate_q  exp(i s p):   psi(q) -> psi(q + s), a shift by -s
    boost_p      exp(i s q):   momentum kick by +s
    chirp_q2     exp(i s q^2): pointwise phase
    chirp_p2     exp(i s p^2): phase in the dual domain (free flight for s = -t/2m)
    """
    s = float(parameter)
    if not np.isfinite(s):
        raise ValueError("parameter must be finite")
    a = psi.amplitudes
    if kind == "translate_q":
        out = _fft_multiply(a, np.exp(1j * s * psi.grid.wavenumbers))
    elif kind == "boost_p":
        out = a * np.exp(1j * s * psi.q)
    elif kind == "chirp_q2":
        out = a * np.exp(1j * s * psi.q**2)
    elif kind == "chirp_p2":
        out = _fft_multiply(a, np.exp(1j * s * psi.grid.wavenumbers**2))
    else:
        raise ValueError(f"unknown unitary kind {kind!r}; expected one of {UNITARY_KINDS}")
    return Wavefunction(out, psi.grid)


def _tanc(x2: float) -> tuple[float, float]:
    """``(tan x / x, sin 2x / 2x)`` for ``x^2 = x2`` continued to ``x2 < 0``."""
    if abs(x2) < 1e-16:
        return 1.0, 1.0
    if x2 > 0:
        x = np.sqrt(x2)
        return np.tan(x) / x, np.sin(2 * x) / (2 * x)
    x = np.sqrt(-x2)
    return np.tanh(x) / x, np.sinh(2 * x) / (2 * x)


def apply_squeeze(psi: Wavefunction, p_chirp: float, q_chirp: float) -> Wavefunction:
    """``exp(i(a p^2 + r q^2)) psi`` as a q-chirp / p-chirp / q-chirp product.

    With ``x^2 = a r`` the factorisation is
    ``chirp_q2(r g / 2) chirp_p2(a s) chirp_q2(r g / 2)``, ``g = tan x / x``,
    ``s = sin 2x / 2x``; it is the continuous lift from the identity, valid
    while ``2x < pi``.
    """
    a, r = float(p_chirp), float(q_chirp)
    if a * r > 0 and 2 * np.sqrt(a * r) >= np.pi:
        raise ValueError("squeeze parameters beyond the principal branch")
    g, s = _tanc(a * r)
    out = apply_gaussian_unitary(psi, "chirp_q2", 0.5 * r * g)
    out = apply_gaussian_unitary(out, "chirp_p2", a * s)
    return apply_gaussian_unitary(out, "chirp_q2", 0.5 * r * g)


def apply_displacement(psi: Wavefunction, kick: float, shift: float) -> Wavefunction:
    """``exp(i e q + i b p) psi = exp(i e b / 2) exp(i e q) exp(i b p) psi``."""
    e, b = float(kick), float(shift)
    out = apply_gaussian_unitary(psi, "translate_q", b)
    out = apply_gaussian_unitary(out, "boost_p", e)
    return out * np.exp(0.5j * e * b)


def apply_transform(psi: Wavefunction, params) -> Wavefunction:
    """``V psi``, displacement after squeeze, for :class:`~lrsolve.transforms.TransformParams`."""
    return apply_displacement(apply_squeeze(psi, params.p_chirp, params.q_chirp), params.kick, params.shift)


def apply_transform_inverse(psi: Wavefunction, params) -> Wavefunction:
    out = apply_displacement(psi, -params.kick, -params.shift)
    return apply_squeeze(out, -params.p_chirp, -params.q_chirp)


def apply_p_power(psi: Wavefunction, j: int) -> np.ndarray:
    if j == 0:
        return psi.amplitudes
    return _fft_multiply(psi.amplitudes, psi.grid.wavenumbers.astype(complex) ** j)


def apply_operator_poly(op: OperatorPoly, psi: Wavefunction, max_degree: int = 4) -> Wavefunction:
    """Act with a normal-ordered polynomial: ``q^i p^j psi = q^i (p^j psi)``."""
    if op.degree > max_degree:
        raise ValueError(f"operator degree {op.degree} exceeds {max_degree}")
    if psi.spectral_tail() > ALIAS_TOL or psi.edge_fraction() > ALIAS_TOL:
        warnings.warn("state is not resolved on the grid; spectral derivatives may alias", AliasingWarning, stacklevel=2)
    out = np.zeros(psi.grid.n_points, dtype=complex)
    cache: dict[int, np.ndarray] = {}
    x = psi.q
    for (i, j), c in op.terms.items():
        if j not in cache:
            cache[j] = apply_p_power(psi, j)
        out += c * x**i * cache[j]
    return Wavefunction(out, psi.grid)


def expectation(op: OperatorPoly, psi: Wavefunction) -> complex:
    return inner(psi, apply_operator_poly(op, psi)) / psi.norm() ** 2


def write_snapshot_csv(path: str | Path, psi: Wavefunction) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "re", "im"])
        for x, a in zip(psi.q, psi.amplitudes):
            w.writerow([f"{x:.17g}", f"{a.real:.17g}", f"{a.imag:.17g}"])


def read_snapshot_csv(path: str | Path, grid: Grid) -> Wavefunction:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.shape[0] != grid.n_points or not np.allclose(data[:, 0], grid.nodes, rtol=0, atol=1e-12):
        raise ValueError("CSV nodes do not match the grid")
    return Wavefunction(data[:, 1] + 1j * data[:, 2], grid)
