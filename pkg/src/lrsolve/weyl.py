"""Polynomials in one canonical pair (q, p) with [q, p] = i.

Every operator is stored in normal order, all q factors to the left of all
p factors, as a mapping ``(qdeg, pdeg) -> complex``.  Products are reduced
with the closed form

    p^b q^c = sum_k  C(b, k) C(c, k) k! (-i)^k  q^(c-k) p^(b-k)

which is the exhaustive application of ``p q = q p - i``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb, factorial
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

ZERO_TOL = 1e-12
SPAN_TOL = 1e-9


class Monomial(NamedTuple):
    """Normal-ordered word ``q**qdeg p**pdeg``."""

    qdeg: int
    pdeg: int

    @property
    def degree(self) -> int:
        return self.qdeg + self.pdeg

    def __str__(self) -> str:
        parts = []
        for sym, k in (("q", self.qdeg), ("p", self.pdeg)):
            if k == 1:
                parts.append(sym)
            elif k > 1:
                parts.append(f"{sym}^{k}")
        return "".join(parts) or "1"


def _prune(terms: Mapping[tuple[int, int], complex]) -> dict[Monomial, complex]:
    return {Monomial(*m): complex(c) for m, c in terms.items() if c != 0}


class OperatorPoly:
    """Immutable complex polynomial in normal-ordered (q, p)."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[tuple[int, int], complex] | None = None):
        for m in terms or ():
            if len(m) != 2 or min(m) < 0:
                raise ValueError(f"invalid monomial {m!r}")
        self._terms = _prune(terms or {})

    # construction helpers
    @classmethod
    def scalar(cls, c: complex) -> "OperatorPoly":
        return cls({(0, 0): c})

    @classmethod
    def monomial(cls, qdeg: int, pdeg: int, coeff: complex = 1.0) -> "OperatorPoly":
        return cls({(qdeg, pdeg): coeff})

    @property
    def terms(self) -> dict[Monomial, complex]:
        return dict(self._terms)

    def coeff(self, qdeg: int, pdeg: int) -> complex:
        return self._terms.get(Monomial(qdeg, pdeg), 0j)

    @property
    def degree(self) -> int:
        return max((m.degree for m in self._terms), default=-1)

    def is_zero(self, tol: float = ZERO_TOL) -> bool:
        return all(abs(c) < tol for c in self._terms.values())

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    # arithmetic
    def __add__(self, other):
        other = _coerce(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0j) + c
        return OperatorPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return OperatorPoly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, OperatorPoly):
            return _product(self, other)
        if isinstance(other, (int, float, complex, np.number)):
            return OperatorPoly({m: c * other for m, c in self._terms.items()})
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        return self * (1.0 / other)

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        out = OperatorPoly.scalar(1.0)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, (OperatorPoly, int, float, complex)):
            return NotImplemented
        return (self - _coerce(other)).is_zero()

    def __hash__(self):
        return hash(tuple(sorted((m, round(c.real, 10), round(c.imag, 10)) for m, c in self._terms.items())))

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        return " + ".join(f"({c:.6g})*{m}" for m, c in sorted(self._terms.items()))

    def __repr__(self) -> str:
        return f"OperatorPoly({self})"

    def is_hermitian(self, tol: float = ZERO_TOL) -> bool:
        return (self - adjoint(self)).is_zero(tol)

    def to_vector(self, basis: Sequence[Monomial]) -> np.ndarray:
        return np.array([self.coeff(*m) for m in basis], dtype=complex)


def _coerce(x) -> OperatorPoly:
    if isinstance(x, OperatorPoly):
        return x
    return OperatorPoly.scalar(x)


def reorder_pq(b: int, c: int) -> dict[tuple[int, int], complex]:
    """Normal-ordered expansion of ``p**b q**c``."""
    return {
        (c - k, b - k): comb(b, k) * comb(c, k) * factorial(k) * (-1j) ** k
        for k in range(min(b, c) + 1)
    }


def _product(x: OperatorPoly, y: OperatorPoly) -> OperatorPoly:
    out: dict[tuple[int, int], complex] = {}
    for (a, b), cx in x._terms.items():
        for (c, d), cy in y._terms.items():
            for (qi, pj), w in reorder_pq(b, c).items():
                key = (a + qi, pj + d)
                out[key] = out.get(key, 0j) + cx * cy * w
    return OperatorPoly(out)


q = OperatorPoly.monomial(1, 0)
p = OperatorPoly.monomial(0, 1)
one = OperatorPoly.scalar(1.0)


def commutator(a: OperatorPoly, b: OperatorPoly) -> OperatorPoly:
    """``[a, b] = ab - ba`` in normal order."""
    return a * b - b * a


def adjoint(a: OperatorPoly) -> OperatorPoly:
    """Formal adjoint: ``(c q^i p^j)^dagger = conj(c) p^j q^i``, re-ordered."""
    out = OperatorPoly()
    for (i, j), c in a._terms.items():
        out = out + OperatorPoly(reorder_pq(j, i)) * c.conjugate()
    return out


def conjugate(generator: OperatorPoly, x: OperatorPoly, max_order: int = 200, tol: float = 1e-16) -> OperatorPoly:
    """Adjoint action ``exp(-G) X exp(G)`` as the nested-commutator series.

    The series terminates exactly when ``G`` is at most linear.  For quadratic
    ``G`` acting on polynomials of bounded degree it is summed until the terms
    drop below ``tol``.
    """
    total = x
    term = x
    for k in range(1, max_order + 1):
        term = commutator(generator, term) * (-1.0 / k)
        if term.max_abs_coeff() < tol:
            return total
        total = total + term
    raise ArithmeticError(f"adjoint series did not converge in {max_order} terms")


def monomials_up_to(degree: int) -> list[Monomial]:
    return [Monomial(i, d - i) for d in range(degree + 1) for i in range(d, -1, -1)]


@dataclass(frozen=True)
class ClosureReport:
    closed: bool
    witness: tuple[int, int] | None = None
    witness_bracket: OperatorPoly | None = None
    out_of_span: OperatorPoly | None = None
    max_residual: float = 0.0
    failures: list[tuple[int, int]] = field(default_factory=list)

    @property
    def witness_degree(self) -> int:
        return -1 if self.out_of_span is None else self.out_of_span.degree


def _span_projection(gens: Sequence[OperatorPoly], target: OperatorPoly):
    basis = sorted({m for g in list(gens) + [target] for m in g.terms})
    G = np.array([g.to_vector(basis) for g in gens]).T
    v = target.to_vector(basis)
    x, *_ = np.linalg.lstsq(G, v, rcond=None)
    resid = v - G @ x
    return x, OperatorPoly({m: r for m, r in zip(basis, resid)}), float(np.linalg.norm(resid))


def span_coordinates(gens: Sequence[OperatorPoly], target: OperatorPoly, tol: float = SPAN_TOL) -> np.ndarray:
    """Coordinates of ``target`` in the span of ``gens``; raises if outside."""
    x, _, r = _span_projection(gens, target)
    if r > tol:
        raise ValueError(f"operator lies outside the generator span (residual {r:.3g})")
    x = np.where(np.abs(x) < ZERO_TOL, 0.0, x)
    return x


def check_closure(generators: Sequence[OperatorPoly], tol: float = SPAN_TOL) -> ClosureReport:
    """Test whether pairwise brackets stay in the linear span of ``generators``.

    The reported witness is the failing pair whose out-of-span part has the
    highest degree (ties broken by residual norm).
    """
    gens = list(generators)
    if not gens:
        raise ValueError("need at least one generator")
    best = None
    failures = []
    worst = 0.0
    for i, j in itertools.combinations(range(len(gens)), 2):
        br = commutator(gens[i], gens[j])
        if br.is_zero():
            continue
        _, resid_op, r = _span_projection(gens, br)
        worst = max(worst, r)
        if r > tol:
            failures.append((i, j))
            rank = (resid_op.degree, r)
            if best is None or rank > best[0]:
                best = (rank, (i, j), br, resid_op)
    if best is None:
        return ClosureReport(closed=True, max_residual=worst)
    _, pair, br, resid_op = best
    return ClosureReport(False, pair, br, resid_op, worst, failures)


# Liouville-von Neumann machinery


def lvn_residual(
    basis: Sequence[OperatorPoly],
    hamiltonian: OperatorPoly,
    coeff_values: Sequence[float],
    coeff_derivatives: Sequence[float],
) -> OperatorPoly:
    """``dI/dt + (1/i)[I, H]`` for ``I = sum_k c_k basis_k`` at one instant."""
    inv = sum((b * c for b, c in zip(basis, coeff_values)), OperatorPoly())
    dinv = sum((b * c for b, c in zip(basis, coeff_derivatives)), OperatorPoly())
    return dinv - 1j * commutator(inv, hamiltonian)


def lvn_matrix(basis: Sequence[OperatorPoly], hamiltonian_part: OperatorPoly) -> np.ndarray:
    """Linear map ``c -> dc/dt`` forced by a Hamiltonian term.

    Column ``l`` holds the basis coordinates of ``i [basis_l, H]``; setting
    the residual to zero gives ``dc/dt = M c``.  Raises when a bracket leaves
    the span, i.e. the ansatz is not closed under the Hamiltonian.
    """
    cols = [span_coordinates(basis, 1j * commutator(b, hamiltonian_part)) for b in basis]
    M = np.array(cols).T
    if np.abs(M.imag).max(initial=0.0) > ZERO_TOL:
        raise ValueError("basis is not Hermitian with respect to the Hamiltonian flow")
    return M.real.copy()


LINEAR_BASIS = (p, q, one)
QUADRATIC_BASIS = (p * p, q * p + p * q, q * q, p, q, one)


def hamiltonian(mass: float, force: float, omega: float = 0.0) -> OperatorPoly:
    """``p^2/2m + f q + m w^2 q^2 / 2`` at one instant."""
    return p * p * (0.5 / mass) + q * force + q * q * (0.5 * mass * omega**2)


def random_poly(rng: np.random.Generator, degree: int, scale: int = 3) -> OperatorPoly:
    """Small-integer complex coefficients on every monomial of degree <= ``degree``."""
    terms = {}
    for m in monomials_up_to(degree):
        re, im = rng.integers(-scale, scale + 1, size=2)
        terms[tuple(m)] = complex(re, im)
    return OperatorPoly(terms)


def from_words(words: Iterable[tuple[str, complex]]) -> OperatorPoly:
    """Build from ``[("qpq", 2.0), ...]`` operator words (product left to right)."""
    out = OperatorPoly()
    sym = {"q": q, "p": p}
    for word, c in words:
        term = one
        for ch in word:
            term = term * sym[ch]
        out = out + term * c
    return out
