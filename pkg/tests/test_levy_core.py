from __future__ import annotations

import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as spi

from conftest import cubic_tail, loginfinite, paper_1d, triplet, unit_linear
from levy_nfl.errors import IntegrabilityFailure, InvalidTriplet
from levy_nfl.levy_core import (
    Atom,
    DensitySegment,
    HalfLine,
    Interval,
    JumpMeasure,
    LevyTriplet,
    Polynomial,
    PowerLaw,
    PowerLog,
    approximate,
    approximation_factor,
    char_exponent,
    integrate,
    integrates_log,
    log_exp_moment,
    mean_rate,
    segment_from_json,
    segment_to_json,
    small_jump_mean,
)

coord = st.floats(-3.0, 3.0, allow_nan=False).filter(lambda v: abs(v) > 1e-3)
rates = st.floats(0.05, 5.0)
atoms_1d = st.lists(st.tuples(coord, rates), min_size=1, max_size=5)


def _atomic_char(b, c, atoms, u):
    out = complex(-0.5 * c * u * u, b * u)
    for x, r in atoms:
        out += r * (cmath.exp(1j * u * x) - 1 - (1j * u * x if abs(x) <= 1 else 0))
    return out


# -- characteristic exponent ---------------------------------------------------


def test_char_exponent_brownian_motion():
    assert char_exponent(triplet(0.0, 1.0), [1.0]) == pytest.approx(-0.5)


def test_char_exponent_unit_atom_truncated_drift():
    val = char_exponent(triplet(0.0, atoms=[(1.0, 2.0)]), [math.pi])
    assert val == pytest.approx(complex(-4.0, -2.0 * math.pi), abs=1e-12)


def test_char_exponent_poisson_process_against_series():
    # X = N_t with N Poisson(2): E exp(iuN_1) summed term by term
    u = math.pi
    series = sum(math.exp(-2.0) * 2.0**k / math.factorial(k) * cmath.exp(1j * u * k) for k in range(80))
    val = char_exponent(triplet(2.0, atoms=[(1.0, 2.0)]), [u])
    assert cmath.exp(val) == pytest.approx(series, abs=1e-12)
    assert val.real == pytest.approx(-4.0)


@given(st.floats(-2, 2), st.floats(0, 2), atoms_1d, st.floats(-20, 20))
def test_char_exponent_atomic_closed_form(b, c, atoms, u):
    val = char_exponent(triplet(b, c, atoms), [u])
    assert val == pytest.approx(_atomic_char(b, c, atoms, u), abs=1e-9, rel=1e-9)


@given(atoms_1d, st.floats(-30, 30))
def test_hermitian_symmetry_atomic(atoms, u):
    t = triplet(0.3, 0.1, atoms)
    assert char_exponent(t, [-u]) == pytest.approx(char_exponent(t, [u]).conjugate(), abs=1e-10)


@pytest.mark.parametrize("make", [paper_1d, loginfinite, cubic_tail])
@pytest.mark.parametrize("u", [0.7, 3.0, 11.0])
def test_hermitian_symmetry_densities(make, u):
    t = make()
    assert char_exponent(t, [-u]) == pytest.approx(char_exponent(t, [u]).conjugate(), abs=1e-8)


def test_char_exponent_density_against_direct_quadrature():
    t = paper_1d()
    u = 2.3
    re = spi.quad(lambda x: (math.cos(u * x) - 1) * (1 + x), -1, 1, epsabs=1e-13)[0]
    im = spi.quad(lambda x: (math.sin(u * x) - u * x) * (1 + x), -1, 1, epsabs=1e-13)[0]
    assert char_exponent(t, [u]) == pytest.approx(complex(re, u + im), abs=1e-9)


def test_char_exponent_heavy_tail_against_mpmath():
    u = 2.0
    t = cubic_tail(0.0)
    mp.mp.dps = 25
    re = mp.quadosc(lambda x: (mp.cos(u * x) - 1) / x**3, [1, mp.inf], omega=u)
    im = mp.quadosc(lambda x: mp.sin(u * x) / x**3, [1, mp.inf], omega=u)
    assert char_exponent(t, [u]) == pytest.approx(complex(float(re), float(im)), abs=1e-8)


def test_char_exponent_additive_and_time_scaling():
    a, b = paper_1d(), triplet(0.2, 0.3, [(0.4, 1.0)])
    u = [1.7]
    assert char_exponent(a.combine(b), u) == pytest.approx(char_exponent(a, u) + char_exponent(b, u), abs=1e-10)
    assert char_exponent(a.scaled(2.5), u) == pytest.approx(2.5 * char_exponent(a, u), abs=1e-10)


def test_char_exponent_2d_gaussian():
    c = np.array([[0.04, 0.01], [0.01, 0.09]])
    t = LevyTriplet(np.array([0.1, 0.05]), c)
    u = np.array([1.0, -2.0])
    assert char_exponent(t, u) == pytest.approx(complex(-0.5 * u @ c @ u, u @ t.b))


# -- moments -----------------------------------------------------------------------


def test_integrate_polynomial_density():
    val = integrate(paper_1d().nu, lambda x: -x[:, 0] ** 2, "quadraticNearZero")
    assert val == pytest.approx(-2.0 / 3.0, abs=1e-12)


@given(st.integers(0, 6), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_integrate_monomials(k, a0, a1):
    seg = DensitySegment(Polynomial((a0 + a1, a1)), Interval(-1.0, 1.0))  # nonnegative on [-1, 1]
    got = integrate(JumpMeasure((), (seg,)), lambda x: x[:, 0] ** k)
    exact = sum(c * ((1 - (-1) ** (k + j + 1)) / (k + j + 1)) for j, c in enumerate((a0 + a1, a1)))
    assert got == pytest.approx(exact, abs=1e-10)


def test_mean_rate_values():
    assert mean_rate(triplet(0.0, atoms=[(2.0, 3.0)]))[0] == pytest.approx(6.0)
    assert mean_rate(cubic_tail())[0] == pytest.approx(-0.5, abs=1e-10)
    assert mean_rate(paper_1d())[0] == pytest.approx(1.0)
    with pytest.raises(IntegrabilityFailure) as exc:
        mean_rate(triplet(0.0, densities=[DensitySegment(PowerLaw(2.0), Interval(1.0, math.inf))]))
    assert exc.value.tails


def test_log_exp_moment_values():
    assert log_exp_moment(triplet(0.0)) == 0.0
    assert log_exp_moment(triplet(1.0, atoms=[(1.0, 1.0)])) == pytest.approx(math.e - 1)
    assert log_exp_moment(triplet(0.0, 0.5)) == pytest.approx(0.25)
    assert log_exp_moment(cubic_tail()) == math.inf


def test_integrates_log_and_approximation():
    assert integrates_log(cubic_tail().nu)
    assert integrates_log(paper_1d().nu)
    li = loginfinite().nu
    assert not integrates_log(li)
    assert not integrates_log(JumpMeasure((), (DensitySegment(PowerLog(1.5), Interval(1.0, math.inf)),)))
    for n in (1, 4, 1024):
        assert integrates_log(approximate(li, n))


def test_approximation_factor_values():
    got = approximation_factor([[10.0], [10.0], [10.0], [10.0], [0.5]], 1)
    assert got[0] == pytest.approx(0.1) and got[-1] == 1.0
    assert [float(approximation_factor([[10.0]], n)[0]) for n in (2, 4)] == pytest.approx([10**-0.5, 10**-0.25])
    assert float(approximation_factor([[3.0, 4.0]], 8)[0]) == pytest.approx(5 ** (-1 / 8))


def test_approximate_rescales_atoms_only_outside_unit_ball():
    nu = JumpMeasure((Atom((0.5,), 2.0), Atom((4.0,), 1.0)))
    out = approximate(nu, 2)
    assert [a.rate for a in out.atoms] == pytest.approx([2.0, 0.5])


def test_small_jump_mean():
    assert small_jump_mean(paper_1d().nu, 1)[0] == pytest.approx(2.0 / 3.0)


# -- validation and JSON --------------------------------------------------------------


@pytest.mark.parametrize(
    "build",
    [
        lambda: LevyTriplet(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]])),
        lambda: LevyTriplet(np.zeros(1), np.array([[-1.0]])),
        lambda: triplet(0.0, atoms=[(0.0, 1.0)]),
        lambda: triplet(0.0, atoms=[(1.0, -1.0)]),
        lambda: triplet(0.0, densities=[DensitySegment(Polynomial((-1.0, 1.0)), Interval(-1.0, 1.0))]),
        lambda: triplet(0.0, densities=[DensitySegment(PowerLaw(3.5), Interval(0.0, 1.0, False, True))]),
        lambda: triplet(0.0, densities=[DensitySegment(PowerLaw(0.5), Interval(1.0, math.inf))]),
        lambda: triplet(0.0, densities=[DensitySegment(Polynomial((1.0,)), Interval(1.0, math.inf))]),
    ],
)
def test_invalid_triplets_rejected(build):
    with pytest.raises(InvalidTriplet):
        build()


def test_triplet_arrays_are_read_only():
    t = paper_1d()
    with pytest.raises(ValueError):
        t.b[0] = 2.0


@pytest.mark.parametrize("make", [paper_1d, loginfinite, cubic_tail])
def test_json_round_trip(make):
    t = make()
    back = LevyTriplet.from_json(t.to_json())
    assert back.to_json() == t.to_json()
    assert char_exponent(back, [1.3]) == pytest.approx(char_exponent(t, [1.3]))


def test_segment_json_with_modifiers():
    seg = DensitySegment(PowerLaw(2.5), HalfLine((0.0, 2.0), 1.0), tilt=(0.1, -0.2), g_weight=1.0, damp=0.5)
    back = segment_from_json(segment_to_json(seg), 2)
    assert back == seg


def test_unit_linear_mass():
    assert integrate(JumpMeasure((), (unit_linear(),)), lambda x: np.ones(len(x))) == pytest.approx(2.0)
