import math

import numpy as np
import pytest
from pydantic import ValidationError
from pytest import mark, raises

from backend.campaigns.verification import VerificationCampaign, admissible_pairs, sample_catalog
from backend.models.errors import DomainError
from backend.models.schemas import (
    BoundaryCondition,
    Equation,
    Family,
    MeanEstimate,
    QuadConfig,
    QuadMethod,
    SolutionSpec,
    Surface,
)
from backend.services import coeffs, means


def constant(points):
    return np.ones(len(points))


def first_coordinate(points):
    return points[:, 0]


def square_norm(points):
    return np.sum(points * points, axis=1)


def exp_first(points):
    return np.exp(points[:, 0])


def plane(equation, m, k=1.0):
    return SolutionSpec(equation=equation, family=Family.PLANE, m=m, wavenumber=k)


@mark.parametrize("m", (2, 3))
@mark.parametrize("surface", (Surface.SPHERE, Surface.BALL))
def test_means_of_constants(m, surface):
    estimate = means.surface_mean(constant, np.zeros(m), 0.7, surface)
    assert estimate.value == pytest.approx(1.0, abs=1e-14)
    assert estimate.std_error == 0.0
    assert estimate.method == QuadMethod.DETERMINISTIC


def test_sphere_and_ball_means_of_an_exponential():
    assert means.sphere_mean(exp_first, np.zeros(3), 1.0).value == pytest.approx(math.sinh(1.0), rel=1e-13)
    assert means.ball_mean(exp_first, np.zeros(3), 1.0).value == pytest.approx(3.0 / math.e, rel=1e-12)


@mark.parametrize("m", (2, 3))
def test_odd_field_averages_to_zero(m):
    assert abs(means.sphere_mean(first_coordinate, np.zeros(m), 0.9).value) <= 1e-14
    assert abs(means.ball_mean(first_coordinate, np.zeros(m), 0.9).value) <= 1e-14


@mark.parametrize("m", (2, 3))
def test_quadratic_means(m):
    x = np.linspace(0.1, 0.3, m)
    r = 0.4
    expected_sphere = float(x @ x) + r * r
    expected_ball = float(x @ x) + r * r * m / (m + 2)
    assert means.sphere_mean(square_norm, x, r).value == pytest.approx(expected_sphere, rel=1e-13)
    assert means.ball_mean(square_norm, x, r).value == pytest.approx(expected_ball, rel=1e-12)


@mark.parametrize("m", (2, 3))
def test_small_radius_limit(m):
    x = np.full(m, 0.2)
    assert means.sphere_mean(exp_first, x, 1e-3).value == pytest.approx(math.exp(0.2), abs=1e-6)
    assert means.ball_mean(exp_first, x, 1e-3).value == pytest.approx(math.exp(0.2), abs=1e-6)


@mark.parametrize("r", (0.0, -0.5))
def test_non_positive_radius_is_rejected(r):
    with raises(DomainError):
        means.sphere_mean(constant, np.zeros(2), r)
    with raises(DomainError):
        means.ball_mean(constant, np.zeros(3), r)


def test_single_coordinate_points_are_rejected():
    with raises(DomainError):
        means.sphere_mean(constant, [0.0], 1.0)


def test_product_rule_stops_at_three_dimensions():
    with raises(DomainError):
        means.sphere_nodes(np.zeros(4), 1.0, QuadConfig())


def test_higher_dimensions_fall_back_to_monte_carlo():
    estimate = means.sphere_mean(constant, np.zeros(4), 1.0, QuadConfig(samples=1000))
    assert estimate.method == QuadMethod.MONTE_CARLO
    assert estimate.n_evals == 1000
    assert estimate.value == 1.0


@mark.parametrize(
    "spec x r".split(),
    (
        (plane(Equation.HELMHOLTZ, 2, 1.1), [0.2, -0.1], 0.4),
        (plane(Equation.MODIFIED, 3, 0.9), [0.1, 0.2, -0.3], 0.45),
        (SolutionSpec(equation=Equation.MODIFIED, family=Family.RADIAL, m=3, wavenumber=0.8), [0.3, 0.0, 0.1], 0.3),
        (SolutionSpec(equation=Equation.HELMHOLTZ, family=Family.DISK_EIGEN, m=2, bc=BoundaryCondition.NEUMANN), [0.2, 0.1], 0.25),
    ),
)
@mark.parametrize("surface", (Surface.SPHERE, Surface.BALL))
def test_identity_residual_known_values(spec, x, r, surface):
    report = means.identity_residual(spec, x, r, surface)
    assert report.passed, report.residuals
    assert report.worst <= 1e-8


@mark.parametrize("m", (5, 7))
def test_monte_carlo_identities_hold_within_three_standard_errors(m):
    reports = VerificationCampaign(m=m).run("identities")
    # 2 plane members, 3 (x, r) pairs each, sphere and ball
    assert len(reports) == 12
    for report in reports:
        std_error = float(report.meta["std_error"])
        assert report.meta["method"] == QuadMethod.MONTE_CARLO.value
        assert 0.0 < std_error < 1e-3
        assert report.residuals[0].value <= 1e-8 + 3.0 * std_error
        assert report.passed


def test_identity_residual_fails_below_its_threshold():
    report = means.identity_residual(plane(Equation.MODIFIED, 2), [0.1, 0.1], 0.3, Surface.SPHERE, tol=-1.0)
    assert not report.passed


@mark.parametrize("m", (2, 3))
def test_catalog_satisfies_both_identities(m):
    rng = np.random.default_rng(11)
    for spec in sample_catalog(m, rng):
        for x, r in admissible_pairs(m, 3, rng):
            for surface in (Surface.SPHERE, Surface.BALL):
                assert means.identity_residual(spec, x, r, surface).passed


@mark.parametrize("m", (2, 3))
def test_epd_residual_known_values(m):
    x = np.full(m, 0.1)
    for spec in (
        SolutionSpec(equation=Equation.MODIFIED, family=Family.RADIAL, m=m, wavenumber=1.0),
        plane(Equation.HELMHOLTZ, m),
    ):
        assert abs(means.epd_residual(spec, x, 0.7, 1e-3)) <= 1e-4


@mark.parametrize("m", (2, 3))
def test_epd_residual_of_a_constant_is_zero(m):
    assert means.epd_residual(constant, np.zeros(m), 0.5, 1e-3) == 0.0


@mark.parametrize("r h".split(), ((0.5, 0.5), (0.5, 0.0), (0.001, 0.01)))
def test_epd_residual_needs_r_above_h(r, h):
    with raises(DomainError):
        means.epd_residual(constant, np.zeros(2), r, h)


def test_monte_carlo_error_bars_cover_the_exact_mean():
    spec = plane(Equation.MODIFIED, 4)
    exact = float(coeffs.mean_coeff(coeffs.SPHERE_MODIFIED, 1.0, 4))
    field = means.field_of(spec)
    covered = 0
    for seed in range(100):
        cfg = QuadConfig(method=QuadMethod.MONTE_CARLO, samples=2000, seed=seed)
        estimate = means.sphere_mean(field, np.zeros(4), 1.0, cfg)
        covered += abs(estimate.value - exact) <= 3.0 * estimate.std_error
    assert covered >= 95


def test_monte_carlo_means_do_not_depend_on_worker_count():
    field = means.field_of(plane(Equation.HELMHOLTZ, 5))
    results = [
        means.ball_mean(field, np.zeros(5), 0.8, QuadConfig(samples=50_000, block_size=4096, seed=3, workers=workers))
        for workers in (1, 4)
    ]
    assert results[0] == results[1]


def test_monte_carlo_means_depend_on_the_seed():
    field = means.field_of(plane(Equation.HELMHOLTZ, 4))
    first, second = (means.sphere_mean(field, np.zeros(4), 1.0, QuadConfig(samples=5000, seed=seed)) for seed in (0, 1))
    assert first.value != second.value


@mark.parametrize("bc", (BoundaryCondition.DIRICHLET, BoundaryCondition.NEUMANN))
@mark.parametrize("n", (1, 2))
def test_eigenfunction_means_vanish(bc, n):
    assert abs(means.eigenfunction_mean(bc, n).value) <= 1e-10


def test_eigenfunction_means_scale_with_the_disk():
    assert abs(means.eigenfunction_mean(BoundaryCondition.DIRICHLET, 1, radius=2.5).value) <= 1e-10


def test_deterministic_estimates_carry_no_error():
    with raises(ValidationError):
        MeanEstimate(value=1.0, std_error=0.1, n_evals=10, method=QuadMethod.DETERMINISTIC)
    with raises(ValidationError):
        MeanEstimate(value=1.0, std_error=-0.1, n_evals=10, method=QuadMethod.MONTE_CARLO)
