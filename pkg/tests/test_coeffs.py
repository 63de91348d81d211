import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings as hyp_settings
from hypothesis.strategies import floats, integers
from pytest import mark, raises
from scipy import special

from backend.models.errors import DomainError
from backend.models.schemas import CoeffKind
from backend.services import coeffs
from backend.services.coeffs import ALL_KINDS, BALL_HELMHOLTZ, BALL_MODIFIED, SPHERE_HELMHOLTZ, SPHERE_MODIFIED

DIMENSIONS = (2, 3, 4, 5)


@mark.parametrize("m", (2, 3, 4, 5, 6, 7))
@mark.parametrize("kind", ALL_KINDS, ids=lambda kind: kind.label)
def test_value_at_zero_is_exactly_one(kind, m):
    assert coeffs.mean_coeff(kind, 0.0, m) == 1.0


@mark.parametrize(
    "kind t m expected".split(),
    (
        (SPHERE_HELMHOLTZ, math.pi / 2, 3, 2 / math.pi),
        (BALL_MODIFIED, 1.0, 3, 3 / math.e),
        (SPHERE_MODIFIED, 1.0, 3, math.sinh(1.0)),
        (SPHERE_HELMHOLTZ, 1.0, 2, special.j0(1.0)),
        (BALL_HELMHOLTZ, 2.0, 4, 2.0 * special.jv(2, 2.0)),
    ),
)
def test_closed_form_values(kind, t, m, expected):
    assert coeffs.mean_coeff(kind, t, m) == pytest.approx(expected, rel=1e-12)


@mark.parametrize("kind", ALL_KINDS, ids=lambda kind: kind.label)
def test_bad_arguments(kind):
    with raises(DomainError):
        coeffs.mean_coeff(kind, -0.1, 3)
    with raises(DomainError):
        coeffs.mean_coeff(kind, 1.0, 1)


def test_kind_parsing():
    assert CoeffKind.parse("sphere-modified") == SPHERE_MODIFIED
    assert CoeffKind.parse("ball/helmholtz") == BALL_HELMHOLTZ
    with raises(ValueError):
        CoeffKind.parse("cube-modified")


@mark.parametrize("m", DIMENSIONS)
@mark.parametrize("kind", ALL_KINDS, ids=lambda kind: kind.label)
def test_quadratic_approach_to_one(kind, m):
    t = np.linspace(0.001, 0.1, 50)
    assert np.all(np.abs(coeffs.mean_coeff(kind, t, m) - 1.0) <= t**2 / m)


@hyp_settings(max_examples=50, deadline=None)
@given(floats(min_value=1e-3, max_value=1.0), integers(min_value=2, max_value=9))
def test_ordering_near_zero(t, m):
    assert coeffs.mean_coeff(SPHERE_MODIFIED, t, m) > 1.0 > coeffs.mean_coeff(SPHERE_HELMHOLTZ, t, m)
    assert coeffs.mean_coeff(BALL_MODIFIED, t, m) > 1.0 > coeffs.mean_coeff(BALL_HELMHOLTZ, t, m)


@mark.parametrize("m", DIMENSIONS)
def test_monotonicity(m):
    limit = coeffs.coeff_first_zero(BALL_HELMHOLTZ, m)
    falling = coeffs.mean_coeff(SPHERE_HELMHOLTZ, np.linspace(0.01, 0.999 * limit, 300), m)
    rising = coeffs.mean_coeff(SPHERE_MODIFIED, np.linspace(0.01, 50.0, 300), m)
    assert np.all(np.diff(falling) < 0)
    assert np.all(np.diff(rising) > 0)


@mark.parametrize("m", DIMENSIONS)
def test_sign_change_at_first_zero(m):
    zero = coeffs.coeff_first_zero(SPHERE_HELMHOLTZ, m)
    assert np.all(coeffs.mean_coeff(SPHERE_HELMHOLTZ, np.linspace(0.01, zero - 1e-8, 200), m) > 0)
    assert coeffs.mean_coeff(SPHERE_HELMHOLTZ, zero + 1e-8, m) < 0


@mark.parametrize(
    "kind m expected".split(),
    ((SPHERE_HELMHOLTZ, 3, math.pi), (SPHERE_HELMHOLTZ, 2, 2.404825557695773), (BALL_HELMHOLTZ, 2, 3.831705970207512)),
)
def test_first_zero(kind, m, expected):
    assert coeffs.coeff_first_zero(kind, m) == pytest.approx(expected, abs=1e-10)


@mark.parametrize("kind", (SPHERE_MODIFIED, BALL_MODIFIED), ids=lambda kind: kind.label)
def test_modified_kinds_have_no_zeros(kind):
    with raises(DomainError):
        coeffs.coeff_first_zero(kind, 3)
    with raises(DomainError):
        coeffs.coeff_zeros(kind, 3, 2)


def test_zeros_of_the_three_dimensional_sphere_coefficient():
    np.testing.assert_allclose(coeffs.coeff_zeros(SPHERE_HELMHOLTZ, 3, 4), np.pi * np.arange(1, 5), atol=1e-10)


def test_three_dimensional_closed_forms():
    t = np.linspace(0.05, 30.0, 500)
    np.testing.assert_allclose(coeffs.mean_coeff(SPHERE_HELMHOLTZ, t, 3), np.sin(t) / t, rtol=0, atol=1e-12)
    np.testing.assert_allclose(coeffs.mean_coeff(SPHERE_MODIFIED, t, 3), np.sinh(t) / t, rtol=1e-12)


@mark.parametrize("m", DIMENSIONS)
@mark.parametrize("r", (0.5, 1.0, 2.0))
def test_cauchy_problem_residual(m, r):
    h = 1e-4
    minus, centre, plus = coeffs.mean_coeff(SPHERE_MODIFIED, np.array([r - h, r, r + h]), m)
    residual = (plus - 2 * centre + minus) / h**2 + (m - 1) / r * (plus - minus) / (2 * h) - centre
    assert abs(residual) <= 1e-5


@mark.parametrize("m", DIMENSIONS)
@mark.parametrize("kind", (SPHERE_HELMHOLTZ, SPHERE_MODIFIED), ids=lambda kind: kind.label)
def test_derivative_identity(kind, m):
    h = 1e-5
    for t in (0.3, 1.0, 2.5, 7.0):
        lo, hi = coeffs.mean_coeff(kind, np.array([t - h, t + h]), m)
        assert coeffs.mean_coeff_derivative(kind, t, m) == pytest.approx((hi - lo) / (2 * h), rel=1e-6, abs=1e-9)


def test_ball_derivatives_are_not_offered():
    with raises(DomainError):
        coeffs.mean_coeff_derivative(BALL_MODIFIED, 1.0, 3)


@mark.parametrize("m expected".split(), ((3, 0.5), (2, 1 / math.sqrt(2 * math.pi)), (5, 1.5), (4, 2 ** 0.5 / math.sqrt(math.pi))))
def test_modified_asymptotic_constant(m, expected):
    assert coeffs.modified_asymptotic_constant(m) == pytest.approx(expected, rel=1e-14)


@mark.parametrize("m", (2, 3, 4))
def test_growth_ratio_at_fifty(m):
    ratio = coeffs.modified_growth_ratio(50.0, m) / coeffs.modified_asymptotic_constant(m)
    assert abs(ratio - 1.0) <= 0.01


def test_growth_ratio_is_finite_past_the_overflow_guard():
    ratio = coeffs.modified_growth_ratio(np.array([800.0, 2000.0]), 3)
    np.testing.assert_allclose(ratio, 0.5, rtol=1e-9)
    with raises(DomainError):
        coeffs.modified_growth_ratio(0.0, 3)
