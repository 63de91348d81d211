import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings as hyp_settings
from hypothesis.strategies import floats, sampled_from
from pytest import mark, raises
from scipy import special
from scipy.integrate import quad

from backend.models.errors import DomainError
from backend.services import specfun

HALF_INTEGER_ORDERS = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.5, 4.5]


@mark.parametrize("x expected".split(), ((1.0, 1.0), (0.5, math.sqrt(math.pi)), (2.5, 0.75 * math.sqrt(math.pi)), (6.0, 120.0)))
def test_gamma_half_integers(x, expected):
    assert specfun.gamma(x) == pytest.approx(expected, rel=1e-13)


@mark.parametrize("x", (0.0, -0.5, 1.3, float("nan")))
def test_gamma_rejects_other_arguments(x):
    with raises(DomainError):
        specfun.gamma(x)


def test_bessel_j_known_values():
    assert specfun.bessel_j(0, 0.0) == 1.0
    assert abs(specfun.bessel_j(0.5, math.pi)) <= 1e-12
    assert abs(specfun.bessel_j(0, 2.4048256)) <= 1e-7


def test_bessel_i_known_values():
    assert specfun.bessel_i(0, 0.0) == 1.0
    assert specfun.bessel_i(0.5, 1.0) == pytest.approx(math.sqrt(2 / math.pi) * math.sinh(1.0), rel=1e-10)
    assert specfun.bessel_i(1, 1.0) == pytest.approx(0.5651591, abs=1e-7)


@mark.parametrize("nu", HALF_INTEGER_ORDERS)
def test_bessel_j_against_scipy(nu):
    z = np.linspace(0.0, 100.0, 1001)
    reference = special.jv(nu, z)
    assert np.all(np.abs(specfun.bessel_j(nu, z) - reference) <= 1e-10 * np.abs(reference) + 1e-12)


@mark.parametrize("nu", HALF_INTEGER_ORDERS)
def test_bessel_i_against_scipy(nu):
    z = np.linspace(0.0, 100.0, 501)
    np.testing.assert_allclose(specfun.bessel_i(nu, z), special.iv(nu, z), rtol=1e-10, atol=0)


@mark.parametrize("nu", (0.0, 0.5, 2.0))
def test_scaled_bessel_i_past_the_overflow_guard(nu):
    z = np.array([10.0, 650.0, 800.0, 1000.0])
    np.testing.assert_allclose(specfun.bessel_i(nu, z, scaled=True), special.ive(nu, z), rtol=1e-9)
    assert np.isinf(specfun.bessel_i(nu, 1000.0))


def test_closed_forms_of_order_one_half():
    z = np.linspace(0.1, 30.0, 200)
    np.testing.assert_allclose(specfun.bessel_j(0.5, z), np.sqrt(2 / (np.pi * z)) * np.sin(z), rtol=1e-10, atol=1e-13)
    np.testing.assert_allclose(specfun.bessel_i(0.5, z), np.sqrt(2 / (np.pi * z)) * np.sinh(z), rtol=1e-12)


@mark.parametrize("nu", (0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.5, 6.0))
def test_branch_seams_agree(nu):
    lower = specfun.SERIES_LIMIT
    upper = specfun.asymptotic_crossover(nu)
    assert abs(specfun.bessel_j_series(nu, lower) - specfun.bessel_j_recurrence(nu, lower)) <= 1e-10
    assert abs(specfun.bessel_j_recurrence(nu, upper) - specfun.bessel_j_asymptotic(nu, upper)) <= 1e-10


@hyp_settings(max_examples=60, deadline=None)
@given(sampled_from([1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5]), floats(min_value=0.1, max_value=50.0))
def test_three_term_recurrences(nu, z):
    j_terms = [z * specfun.bessel_j(nu + 1, z), -2 * nu * specfun.bessel_j(nu, z), z * specfun.bessel_j(nu - 1, z)]
    assert abs(sum(j_terms)) <= 1e-10 * max(abs(t) for t in j_terms)

    i_terms = [z * specfun.bessel_i(nu + 1, z), 2 * nu * specfun.bessel_i(nu, z), -z * specfun.bessel_i(nu - 1, z)]
    assert abs(sum(i_terms)) <= 1e-10 * max(abs(t) for t in i_terms)


@mark.parametrize("nu", (0.0, 0.5, 1.0, 1.5))
@mark.parametrize("z", (0.5, 2.0, 5.0, 10.0))
def test_derivative_identities(nu, z):
    h = 1e-5

    def scaled_j(t):
        return t**-nu * specfun.bessel_j(nu, t)

    def scaled_i(t):
        return t**-nu * specfun.bessel_i(nu, t)

    exact_j = -(z**-nu) * specfun.bessel_j(nu + 1, z)
    exact_i = z**-nu * specfun.bessel_i(nu + 1, z)
    assert (scaled_j(z + h) - scaled_j(z - h)) / (2 * h) == pytest.approx(exact_j, rel=1e-6)
    assert (scaled_i(z + h) - scaled_i(z - h)) / (2 * h) == pytest.approx(exact_i, rel=1e-6)


@mark.parametrize("nu", (0.0, 0.5, 1.0, 1.5))
@mark.parametrize("z", (1.0, 5.0, 10.0))
def test_integral_identity(nu, z):
    integral, _ = quad(lambda x: x ** (1 + nu) * specfun.bessel_j(nu, x), 0.0, z, epsabs=1e-13, epsrel=1e-13, limit=200)
    closed = z ** (1 + nu) * specfun.bessel_j(nu + 1, z)
    assert abs(integral - closed) <= 1e-8 * max(1.0, abs(closed))


@mark.parametrize(
    "nu n expected".split(),
    ((0.5, 1, math.pi), (0.0, 1, 2.404825557695773), (1.0, 1, 3.831705970207512), (0.5, 4, 4 * math.pi)),
)
def test_bessel_j_zero_known_values(nu, n, expected):
    assert specfun.bessel_j_zero(nu, n) == pytest.approx(expected, abs=1e-10)


@mark.parametrize("order", (0, 1, 2, 5))
def test_integer_order_zeros_match_scipy(order):
    reference = special.jn_zeros(order, 6)
    computed = [specfun.bessel_j_zero(order, n) for n in range(1, 7)]
    np.testing.assert_allclose(computed, reference, rtol=0, atol=1e-10)


@mark.parametrize("nu", (0.0, 0.5, 1.5, 2.5, 7.5))
def test_bessel_j_vanishes_at_its_zeros(nu):
    for n in range(1, 6):
        assert abs(specfun.bessel_j(nu, specfun.bessel_j_zero(nu, n))) <= 1e-8


def test_bessel_j_zero_rejects_bad_index():
    with raises(DomainError):
        specfun.bessel_j_zero(0.0, 0)
    with raises(DomainError):
        specfun.bessel_j_zero(-1.0, 1)


@mark.parametrize("m expected".split(), ((1, 2.0), (2, math.pi), (3, 4 * math.pi / 3), (4, math.pi**2 / 2)))
def test_unit_ball_volume(m, expected):
    assert specfun.unit_ball_volume(m) == pytest.approx(expected, rel=1e-14)


def test_unit_ball_volume_rejects_zero():
    with raises(DomainError):
        specfun.unit_ball_volume(0)


@mark.parametrize("function", (specfun.bessel_j, specfun.bessel_i))
def test_negative_arguments_are_rejected(function):
    with raises(DomainError):
        function(0.0, -1.0)
    with raises(DomainError):
        function(-0.5, 1.0)


def test_shapes_follow_the_argument():
    assert isinstance(specfun.bessel_j(1.0, 2.0), float)
    assert specfun.bessel_j(1.0, np.ones((2, 3))).shape == (2, 3)
    assert specfun.normalized_bessel(1.5, np.zeros(4)).tolist() == [1.0] * 4
    assert specfun.normalized_bessel(1.5, 0.0, modified=True) == 1.0
