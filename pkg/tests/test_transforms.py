import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lrsolve import weyl
from lrsolve.invariants import QuadCoeffs, generate_ode_system, integrate
from lrsolve.solutions import transform_sequence
from lrsolve.transforms import (
    NotEllipticError,
    act_on_form,
    squeeze_candidates,
    conjugate_displacement,
    conjugate_squeeze,
    displacement_params,
    full_conjugation,
    reduce_quadratic,
    reduction_residual,
    solve_squeeze,
    squeeze_matrix,
)
from lrsolve.weyl import p, q


def quad_op(c: QuadCoeffs):
    return sum((b * x for b, x in zip(weyl.QUADRATIC_BASIS, c.as_array())), weyl.OperatorPoly())


@st.composite
def elliptic(draw):
    pp = draw(st.floats(0.1, 5.0))
    qq = draw(st.floats(0.1, 5.0))
    qp = draw(st.floats(-0.95, 0.95)) * np.sqrt(pp * qq)
    linear = [draw(st.floats(-3, 3)) for _ in range(3)]
    return QuadCoeffs(pp, qp, qq, *linear)


def test_displacement_is_a_shift():
    # V = exp(i p): V^dagger q V = q - 1
    assert conjugate_displacement(q, 0.0, 1.0) == q - 1
    # V = exp(i q): V^dagger p V = p + 1
    assert conjugate_displacement(p, 1.0, 0.0) == p + 1


def test_completing_the_square():
    c = QuadCoeffs(1, 0, 1, 0, 2, 0)
    kick, shift = displacement_params(c)
    assert kick == 0 and shift == pytest.approx(1.0)
    prm = reduce_quadratic(c)
    assert prm.shift == pytest.approx(1.0) and prm.offset == pytest.approx(-1.0)
    assert prm.p_chirp == 0 and prm.q_chirp == 0 and prm.level_spacing == 2.0
    assert prm.eigenvalue(0) == pytest.approx(0.0)


def test_isotropic_seed_needs_no_transform():
    prm = reduce_quadratic(QuadCoeffs())
    assert (prm.kick, prm.shift, prm.p_chirp, prm.q_chirp) == (0, 0, 0, 0)
    assert prm.level_spacing == 2.0 and prm.offset == 0.0


def test_pure_squeeze():
    c = QuadCoeffs(4.0, 0.0, 0.25)
    pc, qc, vs = solve_squeeze(c)
    assert vs == pytest.approx(2.0)
    assert act_on_form(squeeze_matrix(pc, qc), 4.0, 0.0, 0.25) == pytest.approx((1.0, 0.0, 1.0), abs=1e-12)
    assert reduction_residual(quad_op(c), reduce_quadratic(c)) < 1e-9


def test_free_path_point():
    c = QuadCoeffs(2.0, -1.0, 1.0)
    prm = reduce_quadratic(c)
    assert prm.level_spacing == pytest.approx(2.0)
    assert reduction_residual(quad_op(c), prm) < 1e-9


@given(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))
def test_matrix_and_series_adjoint_agree(a, r):
    T = squeeze_matrix(a, r)
    for row, x in zip(T, (q, p)):
        out = conjugate_squeeze(x, a, r)
        assert out.coeff(1, 0) == pytest.approx(row[0], abs=1e-10)
        assert out.coeff(0, 1) == pytest.approx(row[1], abs=1e-10)
        assert abs(out.coeff(0, 0)) < 1e-10


@given(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))
def test_squeeze_matrix_is_symplectic(a, r):
    assert np.linalg.det(squeeze_matrix(a, r)) == pytest.approx(1.0, abs=1e-12)


@given(elliptic())
def test_reduction_on_random_forms(c):
    prm = reduce_quadratic(c)
    op = quad_op(c)
    i1 = conjugate_displacement(op, prm.kick, prm.shift)
    # round-off relative to the cancelling terms, which grow as det -> 0
    scale = 1.0 + 2 * (c.p2 + abs(c.qp) + c.q2) * (abs(prm.kick) + abs(prm.shift))
    assert abs(i1.coeff(1, 0)) < 1e-14 * scale and abs(i1.coeff(0, 1)) < 1e-14 * scale
    iv = full_conjugation(op, prm)
    expected = 2 * np.sqrt(c.casimir)
    assert 2 * iv.coeff(0, 2).real == pytest.approx(expected, rel=1e-10)
    assert 2 * iv.coeff(2, 0).real == pytest.approx(expected, rel=1e-10)
    assert reduction_residual(op, prm) < 1e-9


def test_candidates_reduce_the_form():
    for pp, qp, qq in [(2.0, 0.3, 1.0), (0.5, -0.2, 3.0), (4.0, 0.0, 0.25)]:
        cands = squeeze_candidates(pp, qp, qq)
        assert cands
        for a, r in cands:
            d2, e2, f2 = act_on_form(squeeze_matrix(a, r), pp, qp, qq)
            assert e2 == pytest.approx(0.0, abs=1e-9) and d2 == pytest.approx(f2, rel=1e-9)


def test_non_elliptic_rejected():
    with pytest.raises(NotEllipticError):
        reduce_quadratic(QuadCoeffs(1.0, 2.0, 1.0))
    with pytest.raises(NotEllipticError):
        reduce_quadratic(QuadCoeffs(-1.0, 0.0, -1.0))


def test_displacement_degree_guard():
    with pytest.raises(ValueError):
        conjugate_displacement(q**3, 1j, 1j)


def test_level_spacing_constant_along_path(constant_force):
    path = integrate(generate_ode_system("quadratic", constant_force), QuadCoeffs(), 0.0, 1.0)
    seq = transform_sequence(path, np.linspace(0, 1, 21))
    vs = np.array([s.level_spacing for s in seq])
    assert np.abs(vs - 2.0).max() < 1e-9
    # branch continuity: neighbouring parameters stay close
    ar = np.array([[s.p_chirp, s.q_chirp] for s in seq])
    assert np.abs(np.diff(ar, axis=0)).max() < 0.1
