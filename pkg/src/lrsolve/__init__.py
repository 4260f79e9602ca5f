"""Exact solutions of driven quadratic Schrodinger problems via time-dependent invariants.

Modules, roughly in pipeline order: :mod:`weyl` (normal-ordered operator
algebra), :mod:`invariants` (coefficient flows), :mod:`transforms` (unitary
reduction to an oscillator), :mod:`gridstates`, :mod:`solutions`, and the
split-step reference in :mod:`oracle`.
"""

from .estimators import InvariantSolver, SplitStepPropagator
from .scenario import Scenario, bundled, load

__all__ = ["InvariantSolver", "Scenario", "SplitStepPropagator", "bundled", "load"]
