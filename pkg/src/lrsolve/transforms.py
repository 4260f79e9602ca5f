"""Gaussian unitaries that reduce a quadratic invariant to ``s/2 (p^2 + q^2)``.

A displacement ``exp(i(kick q + shift p))`` removes the linear terms, then a
squeeze ``exp(i(p_chirp p^2 + q_chirp q^2))`` removes the cross term and
equalises the p^2 and q^2 weights.  ``s`` is the level spacing of the
reduced operator.

Adjoint action convention: ``Ad(V) X = V^dagger X V``.  On the column
``x = (q, p)`` a Gaussian unitary acts linearly, ``Ad(V) x = T x``, and the
symmetric quadratic form ``x^T M x`` with ``M = [[q2, qp], [qp, p2]]`` maps
to ``x^T (T^T M T) x`` with no c-number shift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, expm_frechet

from . import weyl
from .invariants import CoefficientPath, QuadCoeffs
from .weyl import OperatorPoly


class NotEllipticError(ValueError):
    """Quadratic form is not positive definite."""


class NewtonError(RuntimeError):
    def __init__(self, msg: str, residual: float):
        super().__init__(msg)
        self.residual = residual


@dataclass(frozen=True)
class TransformParams:
    """Real parameters of ``V = exp(i(kick q + shift p)) exp(i(p_chirp p^2 + q_chirp q^2))``.

    ``V^dagger I V = level_spacing/2 (p^2 + q^2) + offset``.
    """

    kick: float
    shift: float
    p_chirp: float
    q_chirp: float
    level_spacing: float
    offset: float

    def eigenvalue(self, n: int) -> float:
        return (n + 0.5) * self.level_spacing + self.offset


def displacement_params(c: QuadCoeffs) -> tuple[float, float]:
    """``(kick, shift)`` of the displacement that cancels the ``p`` and ``q`` terms."""
    det = c.p2 * c.q2 - c.qp**2
    if abs(det) < 1e-14:
        raise ZeroDivisionError("degenerate quadratic form: p2 q2 - qp^2 = 0")
    # Ad maps q -> q - shift, p -> p + kick; zero the gradient of the shifted form
    kick = (c.qp * c.q1 - c.q2 * c.p1) / (2 * det)
    shift = (c.p2 * c.q1 - c.qp * c.p1) / (2 * det)
    return float(kick), float(shift)


def conjugate_displacement(inv: OperatorPoly, kick: float, shift: float) -> OperatorPoly:
    """``V^dagger inv V`` for ``V = exp(i(kick q + shift p))``; the series terminates."""
    if inv.degree > 2:
        raise ValueError("conjugate_displacement expects a polynomial of degree <= 2")
    return weyl.conjugate(1j * (weyl.q * kick + weyl.p * shift), inv)


def conjugate_squeeze(inv: OperatorPoly, p_chirp: float, q_chirp: float) -> OperatorPoly:
    """``V^dagger inv V`` for ``V = exp(i(p_chirp p^2 + q_chirp q^2))``, summed to convergence."""
    gen = 1j * (weyl.p * weyl.p * p_chirp + weyl.q * weyl.q * q_chirp)
    return weyl.conjugate(gen, inv)


def squeeze_matrix(p_chirp: float, q_chirp: float) -> np.ndarray:
    """``T`` with ``Ad(V) (q, p) = T (q, p)`` for the squeeze.

    For ``G = i(a p^2 + r q^2)``: ``[G, q] = 2a p`` and ``[G, p] = -2r q``, so
    ``ad_G`` acts on the column as ``J = [[0, 2a], [-2r, 0]]`` and
    ``T = exp(-J)``.
    """
    return expm(-_squeeze_generator(p_chirp, q_chirp))


def _squeeze_generator(a: float, r: float) -> np.ndarray:
    return np.array([[0.0, 2 * a], [-2 * r, 0.0]])


def form_matrix(p2: float, qp: float, q2: float) -> np.ndarray:
    return np.array([[q2, qp], [qp, p2]], dtype=float)


def act_on_form(T: np.ndarray, p2: float, qp: float, q2: float) -> tuple[float, float, float]:
    """``(p2, qp, q2)`` of the form after ``Ad`` with matrix ``T``."""
    M2 = T.T @ form_matrix(p2, qp, q2) @ T
    return float(M2[1, 1]), float(0.5 * (M2[0, 1] + M2[1, 0])), float(M2[0, 0])


def _residual(x: np.ndarray, M: np.ndarray, target: float) -> tuple[np.ndarray, np.ndarray]:
    """Residual (p2' - target, qp', q2' - target)/target and its Jacobian in (a, r)."""
    J = _squeeze_generator(*x)
    T = expm(-J)
    res = T.T @ M @ T
    r = np.array([res[1, 1] - target, res[0, 1], res[0, 0] - target]) / target
    jac = np.empty((3, 2))
    for k, dJ in enumerate((np.array([[0.0, 2.0], [0.0, 0.0]]), np.array([[0.0, 0.0], [-2.0, 0.0]]))):
        _, dT = expm_frechet(-J, -dJ)
        dres = dT.T @ M @ T + T.T @ M @ dT
        jac[:, k] = np.array([dres[1, 1], dres[0, 1], dres[0, 0]]) / target
    return r, jac


def _newton(M: np.ndarray, target: float, x0: np.ndarray, max_iter: int, tol: float) -> tuple[np.ndarray, float, bool]:
    x = x0.copy()
    r, jac = _residual(x, M, target)
    norm = float(np.linalg.norm(r))
    for _ in range(max_iter):
        if norm < tol:
            return x, norm, True
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        lam = 1.0
        while lam > 1e-6:
            x_new = x + lam * step
            r_new, jac_new = _residual(x_new, M, target)
            n_new = float(np.linalg.norm(r_new))
            if n_new < norm:
                break
            lam *= 0.5
        else:
            return x, norm, False
        x, r, jac, norm = x_new, r_new, jac_new, n_new
    return x, norm, norm < tol


def _log_candidate(T: np.ndarray) -> np.ndarray | None:
    """(a, r) with ``exp(-J(a, r)) = T`` on the principal branch, if any."""
    d = 0.5 * (T[0, 0] + T[1, 1])
    off = T - d * np.eye(2)
    if d > 1 + 1e-12:
        phi = np.arccosh(d)
        scale = phi / np.sinh(phi)
    elif d > -1 + 1e-12:
        phi = np.arccos(min(d, 1.0))
        scale = 1.0 if phi < 1e-8 else phi / np.sin(phi)
    else:
        return None
    minus_j = scale * off
    return np.array([-0.5 * minus_j[0, 1], 0.5 * minus_j[1, 0]])


def squeeze_candidates(p2: float, qp: float, q2: float) -> list[np.ndarray]:
    """All principal-branch ``(p_chirp, q_chirp)`` making ``T^T M T`` isotropic.

    ``T = sqrt(s) M^(-1/2) R(theta)``; the squeeze family forces equal
    diagonal entries of ``T``, which fixes ``theta`` up to ``theta + pi``.
    """
    M = form_matrix(p2, qp, q2)
    w, U = np.linalg.eigh(M)
    N = U @ np.diag(w**-0.5) @ U.T
    half = float(np.sqrt(np.linalg.det(M)))
    theta = np.arctan2(N[0, 0] - N[1, 1], -2.0 * N[0, 1])
    out = []
    for th in (theta, theta + np.pi):
        R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        cand = _log_candidate(np.sqrt(half) * N @ R)
        if cand is not None:
            out.append(cand)
    return out


def solve_squeeze(
    quad: QuadCoeffs, max_iter: int = 50, tol: float = 1e-12, guess: tuple[float, float] | None = None
) -> tuple[float, float, float]:
    """``(p_chirp, q_chirp, level_spacing)`` mapping ``(p2, qp, q2)`` to ``(s/2, 0, s/2)``.

    The branch is picked in closed form (minimal norm, or nearest to
    ``guess`` for continuity along a path) and refined by damped Newton on
    the 2x2 symplectic representation.
    """
    pp, qp, qq = quad.p2, quad.qp, quad.q2
    det = pp * qq - qp**2
    if det <= 0 or pp <= 0:
        raise NotEllipticError(f"quadratic form (p2={pp}, qp={qp}, q2={qq}) is not elliptic (p2 q2 - qp^2 = {det:.3g})")
    half = float(np.sqrt(det))
    cands = squeeze_candidates(pp, qp, qq)
    if not cands:
        raise NewtonError("no principal-branch squeeze parameters for this form", float("inf"))
    ref = np.zeros(2) if guess is None else np.asarray(guess, dtype=float)
    x0 = min(cands, key=lambda c: (float(np.linalg.norm(c - ref)), tuple(c)))
    x, res, ok = _newton(form_matrix(pp, qp, qq), half, x0, max_iter, tol)
    x = np.where(np.abs(x) < 1e-14, 0.0, x)
    if not ok:
        raise NewtonError(f"squeeze Newton iteration did not converge (residual {res:.3g})", res)
    return float(x[0]), float(x[1]), 2.0 * half


def transform_at(path: CoefficientPath, t: float, guess: TransformParams | None = None) -> TransformParams:
    """Both reduction steps at time ``t`` for a quadratic path."""
    return reduce_quadratic(path.quad_coeffs(t), guess=guess)


def reduce_quadratic(c: QuadCoeffs, guess: TransformParams | None = None) -> TransformParams:
    if not c.elliptic or c.p2 <= 0:
        raise NotEllipticError(f"quadratic invariant is not elliptic (p2 q2 - qp^2 = {c.casimir:.3g})")
    kick, shift = displacement_params(c)
    # q -> q - shift, p -> p + kick leaves only a c-number from the linear part
    a_q, a_p = -shift, kick
    offset = c.p2 * a_p**2 + 2 * c.qp * a_q * a_p + c.q2 * a_q**2 + c.p1 * a_p + c.q1 * a_q + c.c0
    g = None if guess is None else (guess.p_chirp, guess.q_chirp)
    pc, qc, spacing = solve_squeeze(c, guess=g)
    return TransformParams(kick, shift, pc, qc, spacing, float(offset))


def full_conjugation(inv: OperatorPoly, params: TransformParams) -> OperatorPoly:
    """``V^dagger inv V`` with both factors, computed symbolically."""
    i1 = conjugate_displacement(inv, params.kick, params.shift)
    return conjugate_squeeze(i1, params.p_chirp, params.q_chirp)


def reduction_residual(inv: OperatorPoly, params: TransformParams) -> float:
    """Largest coefficient of ``V^dagger I V - s/2 (p^2 + q^2) - offset``."""
    target = (weyl.p * weyl.p + weyl.q * weyl.q) * (0.5 * params.level_spacing) + params.offset
    return (full_conjugation(inv, params) - target).max_abs_coeff()
