from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import minimize

from conftest import triplet
from levy_nfl.constraints import (
    Box,
    FullSpace,
    Intersection,
    Orthant,
    Parabola,
    Polyhedron,
    PolyhedralCone,
    check_null_in_constraints,
    constraint_from_json,
    dykstra,
    kernel_basis,
    natural_constraints,
    natural_constraints_contains,
    null_space,
    sample_points,
    zero_set,
)
from levy_nfl.errors import InvalidTriplet, PreconditionError
from levy_nfl.levy_core import DensitySegment, Interval, Polynomial

finite = st.floats(-20, 20, allow_nan=False)
vec2 = arrays(float, 2, elements=finite)

SETS = {
    "full": FullSpace(2),
    "orthant": Orthant(2),
    "box": Box([-1.0, 0.0], [2.0, np.inf]),
    "polyhedron": Polyhedron([[1.0, 1.0], [-1.0, 2.0], [0.0, -1.0]], [1.0, 2.0, 3.0]),
    "cone": PolyhedralCone([[1.0, 0.0], [1.0, 1.0]]),
    "parabola": Parabola(),
    "intersection": Intersection([Orthant(2), Box([-1.0, -1.0], [1.0, 3.0])]),
    "curved_intersection": Intersection([Parabola(), Box([-1.0, -1.0], [1.0, 0.5])]),
}


def _reference_projection(C, p):
    """Nearest point by constrained minimization; used as an independent oracle."""
    if isinstance(C, Parabola):
        cons = [{"type": "ineq", "fun": lambda q: q[1] - q[0] ** 2}]
    else:
        A, a = C.halfspaces() if C.halfspaces() is not None else (None, None)
        cons = [{"type": "ineq", "fun": lambda q: a - A @ q}]
    res = minimize(lambda q: np.sum((q - p) ** 2), C.project(p) + 0.01, constraints=cons, method="SLSQP", options={"ftol": 1e-14, "maxiter": 500})
    return res.x


@pytest.mark.parametrize("name", sorted(SETS))
@given(p=vec2)
def test_projection_lands_in_set_and_is_idempotent(name, p):
    C = SETS[name]
    q = C.project(p)
    assert C.contains(q, tol=1e-7)
    np.testing.assert_allclose(C.project(q), q, atol=1e-7)


@pytest.mark.parametrize("name", sorted(SETS))
@given(p=vec2, r=vec2)
def test_projection_is_nonexpansive(name, p, r):
    C = SETS[name]
    assert np.linalg.norm(C.project(p) - C.project(r)) <= np.linalg.norm(p - r) + 1e-6


@pytest.mark.parametrize("name", ["box", "polyhedron", "parabola"])
@given(p=vec2)
def test_projection_matches_constrained_minimization(name, p):
    C = SETS[name]
    q = C.project(p)
    ref = _reference_projection(C, p)
    assert np.linalg.norm(q - p) <= np.linalg.norm(ref - p) + 1e-6


@pytest.mark.parametrize("name", ["box", "polyhedron", "cone", "intersection"])
@given(p=vec2)
def test_projection_variational_inequality(name, p):
    # <p - Pp, y - Pp> <= 0 for every generator point y of the set
    C = SETS[name]
    q = C.project(p)
    verts, rays = C.generators()
    for v in verts:
        assert np.dot(p - q, v - q) <= 1e-6 * (1 + np.linalg.norm(p))
    for r in rays:
        assert np.dot(p - q, r) <= 1e-6 * (1 + np.linalg.norm(p))


def test_box_recession_and_conic_hull():
    B = Box([-1.0, 0.0], [2.0, np.inf])
    R = B.recession_cone()
    np.testing.assert_array_equal(R.lo, [0.0, 0.0])
    np.testing.assert_array_equal(R.hi, [0.0, np.inf])
    assert isinstance(B.closed_conic_hull(), Box)
    H = B.closed_conic_hull()
    np.testing.assert_array_equal(H.lo, [-np.inf, 0.0])
    assert isinstance(Box([-1, -1], [1, 1]).closed_conic_hull(), FullSpace)


def test_polyhedron_recession_and_conic_hull():
    P = Polyhedron([[1.0, 0.0], [0.0, -1.0], [-1.0, 0.0]], [1.0, 0.0, 2.0])
    R = P.recession_cone()
    assert R.contains([0.0, 5.0]) and not R.contains([1.0, 0.0])
    H = P.closed_conic_hull()
    assert H.contains([100.0, 1.0]) and not H.contains([0.0, -1.0])


def test_parabola_cones():
    P = Parabola()
    R = P.recession_cone()
    assert R.contains([0.0, 1e6]) and not R.contains([1e-3, 1e6])
    H = P.closed_conic_hull()
    assert H.contains([1e6, 1e-6]) and not H.contains([0.0, -1e-6])


@given(p=vec2, t=st.floats(0.0, 50.0))
def test_recession_directions_stay_feasible(p, t):
    for C in SETS.values():
        x = C.project(p)
        for r in [C.recession_cone().project(p)]:
            assert C.contains(x + t * r, tol=1e-6 * (1 + t * np.linalg.norm(r)))


def test_cone_membership():
    K = PolyhedralCone([[1.0, 0.0], [1.0, 1.0]])
    assert K.contains([3.0, 1.0])
    assert not K.contains([1.0, 2.0])
    assert K.is_cone and not Box([-1, -1], [1, 1]).is_cone


def test_origin_required():
    with pytest.raises(InvalidTriplet):
        Box([1.0], [2.0])
    with pytest.raises(InvalidTriplet):
        Polyhedron([[1.0]], [-1.0])


def test_json_round_trip():
    for C in SETS.values():
        D = constraint_from_json(C.to_json(), 2)
        pts = sample_points(FullSpace(2), 32, 5.0)
        assert all(C.contains(p) == D.contains(p) for p in pts)


def test_dykstra_two_halfplanes():
    projs = [Box([-np.inf, -np.inf], [1.0, np.inf]).project, Box([-np.inf, -np.inf], [np.inf, 1.0]).project]
    np.testing.assert_allclose(dykstra(projs, np.array([3.0, 2.0])), [1.0, 1.0], atol=1e-10)


def test_zero_set():
    Z = zero_set(3)
    np.testing.assert_array_equal(Z.project([1.0, -2.0, 3.0]), np.zeros(3))


def test_null_space_of_degenerate_market():
    # asset 2 duplicates asset 1, so (1, -1) is a null investment
    tri = triplet([0.1, 0.1], [[0.04, 0.04], [0.04, 0.04]], atoms=[((0.2, 0.2), 1.0)])
    nb = null_space(tri)
    assert nb.dim == 1
    np.testing.assert_allclose(abs(nb.basis[0] @ np.array([1.0, -1.0])) / math.sqrt(2), 1.0, atol=1e-12)
    assert nb.distance([1.0, -1.0]) < 1e-12
    check_null_in_constraints(FullSpace(2), nb)
    with pytest.raises(PreconditionError):
        check_null_in_constraints(Orthant(2), nb)


def test_null_space_trivial_for_nondegenerate_market():
    nb = null_space(triplet([0.1, 0.05], [[0.04, 0.01], [0.01, 0.09]]))
    assert nb.dim == 0
    np.testing.assert_array_equal(nb.project_out([1.0, 2.0]), [1.0, 2.0])


def test_kernel_basis():
    K = kernel_basis(np.diag([1.0, 0.0, 2.0]))
    assert K.shape == (1, 3)
    np.testing.assert_allclose(np.abs(K[0]), [0.0, 1.0, 0.0], atol=1e-12)


def test_natural_constraints_from_atoms():
    tri = triplet([0.0, 0.0], atoms=[((0.5, 0.0), 1.0), ((-0.5, -0.25), 1.0)])
    C0 = natural_constraints(tri.nu, 2)
    assert C0.contains([2.0, 0.0])
    assert not C0.contains([3.0, 0.0])
    assert natural_constraints_contains(tri.nu, [-2.0, 0.0])
    assert not natural_constraints_contains(tri.nu, [2.0, 0.1])


def test_natural_constraints_from_unbounded_support():
    # support [1, 2]: a short position loses everything once p < -1/2
    tri = triplet(0.0, densities=[DensitySegment(Polynomial((1.0,)), Interval(1.0, 2.0))])
    C0 = natural_constraints(tri.nu, 1)
    assert C0.contains([10.0]) and C0.contains([-0.5]) and not C0.contains([-0.6])


def test_sample_points_are_feasible():
    for C in SETS.values():
        pts = sample_points(C, 50, 3.0, seed=1)
        assert pts.shape == (50, 2)
        assert all(C.contains(p, tol=1e-7) for p in pts)
