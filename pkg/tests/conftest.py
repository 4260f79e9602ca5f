from dataclasses import replace

import numpy as np
import pytest
from hypothesis import settings

from lrsolve import scenario
from lrsolve.weyl import OperatorPoly

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def as_dict(op: OperatorPoly) -> dict:
    return {tuple(m): c for m, c in op.terms.items()}


def same(a: OperatorPoly, b_terms: dict, tol: float = 1e-9) -> bool:
    keys = set(as_dict(a)) | set(b_terms)
    return all(abs(a.coeff(*k) - b_terms.get(k, 0)) < tol for k in keys)


@pytest.fixture(scope="session")
def constant_force():
    return scenario.bundled("constant_force")


@pytest.fixture(scope="session")
def short_force(constant_force):
    """Constant force on a short window with a small basis, for fast tests."""
    return replace(constant_force, t1=0.2, n_particular=3, n_max=24)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
