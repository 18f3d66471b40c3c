from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from levy_nfl.levy_core import Atom, DensitySegment, Interval, JumpMeasure, LevyTriplet, Polynomial, PowerLaw, PowerLog

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion number -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def triplet(b, c=0.0, atoms=(), densities=()) -> LevyTriplet:
    b = np.atleast_1d(np.asarray(b, float))
    c = np.asarray(c, float)
    if c.ndim == 0:
        c = np.eye(b.size) * float(c)
    atoms = tuple(Atom(tuple(np.atleast_1d(np.asarray(x, float)).tolist()), float(r)) for x, r in atoms)
    return LevyTriplet(b, c, JumpMeasure(atoms, tuple(densities)))


def unit_linear():
    """Density 1 + x on (-1, 1]."""
    return DensitySegment(Polynomial((1.0, 1.0)), Interval(-1.0, 1.0, False, True))


def paper_1d():
    return triplet(1.0, densities=[unit_linear()])


def loginfinite():
    return triplet(
        0.0,
        densities=[
            DensitySegment(Polynomial((1.0,)), Interval(-1.0, 1.0, False, True)),
            DensitySegment(PowerLog(2.0), Interval(1.0, math.inf)),
        ],
    )


def cubic_tail(b=-1.5):
    return triplet(b, densities=[DensitySegment(PowerLaw(3.0), Interval(1.0, math.inf))])


@pytest.fixture
def rng():
    return np.random.default_rng(20241019)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int("".join(ch for ch in k if ch.isdigit())), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:<4} {'PASS' if ok else 'FAIL'}  {detail}")
