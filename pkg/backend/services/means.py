"""Spherical and ball means, and residual checks of the mean value identities.

``f`` is always a vectorised callable taking an (n, m) array of points.
"""

import logging
from typing import Callable, Optional, Tuple, Union

import numpy as np

from config.settings import settings
from backend.models.errors import DomainError
from backend.models.schemas import (
    BoundaryCondition,
    CheckReport,
    CoeffKind,
    Equation,
    Family,
    MeanEstimate,
    QuadConfig,
    QuadMethod,
    SolutionSpec,
    Surface,
)
from backend.services import coeffs, solutions
from backend.services.sampling import BlockStats, merge_all, run_blocks, uniform_directions

logger = logging.getLogger(__name__)

Field = Callable[[np.ndarray], np.ndarray]
Target = Union[SolutionSpec, Field]

SPHERE_STREAM = 1
BALL_STREAM = 2


def field_of(target: Target) -> Field:
    if isinstance(target, SolutionSpec):
        return solutions.as_field(target)
    return target


def _values(f: Field, points: np.ndarray) -> np.ndarray:
    return np.asarray(f(points), dtype=float).reshape(-1)


def _centre(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size < 2:
        raise DomainError(f"points need at least two coordinates, got {x.size}")
    return x


def deterministic(m: int, cfg: QuadConfig) -> bool:
    return m <= 3 and cfg.method == QuadMethod.DETERMINISTIC


def sphere_nodes(x, r: float, cfg: QuadConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes and weights (summing to 1) on the sphere of radius r about x, m in {2, 3}."""
    x = _centre(x)
    m = x.size
    if m == 2:
        n = cfg.points_per_circle
        theta = 2.0 * np.pi * np.arange(n) / n
        directions = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = np.full(n, 1.0 / n)
    elif m == 3:
        cos_theta, w_theta = np.polynomial.legendre.leggauss(cfg.polar_order)
        n_phi = 2 * cfg.polar_order
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        sin_theta = np.sqrt(1.0 - cos_theta**2)
        directions = np.column_stack(
            [
                np.outer(sin_theta, np.cos(phi)).ravel(),
                np.outer(sin_theta, np.sin(phi)).ravel(),
                np.repeat(cos_theta, n_phi),
            ]
        )
        weights = np.repeat(0.5 * w_theta / n_phi, n_phi)
    else:
        raise DomainError(f"deterministic sphere quadrature covers m = 2 and 3, got m = {m}")
    return x + r * directions, weights


def sphere_mean(f: Field, x, r: float, cfg: Optional[QuadConfig] = None) -> MeanEstimate:
    cfg = cfg or QuadConfig()
    x = _centre(x)
    m = x.size
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r}")

    if deterministic(m, cfg):
        points, weights = sphere_nodes(x, r, cfg)
        value = float(weights @ _values(f, points))
        return MeanEstimate(value=value, std_error=0.0, n_evals=weights.size, method=QuadMethod.DETERMINISTIC)

    def block(rng: np.random.Generator, size: int) -> BlockStats:
        return BlockStats.from_samples(_values(f, x + r * uniform_directions(rng, size, m)))

    stats = merge_all(run_blocks(block, cfg.samples, cfg.block_size, cfg.seed, (SPHERE_STREAM,), cfg.workers))
    return MeanEstimate(value=stats.mean, std_error=stats.std_error, n_evals=stats.count, method=QuadMethod.MONTE_CARLO)


def ball_mean(f: Field, x, r: float, cfg: Optional[QuadConfig] = None) -> MeanEstimate:
    """Ball mean as (m / r^m) * int_0^r t^{m-1} M_sphere(f, x, t) dt."""
    cfg = cfg or QuadConfig()
    x = _centre(x)
    m = x.size
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r}")

    if deterministic(m, cfg):
        nodes, weights = np.polynomial.legendre.leggauss(cfg.radial_order)
        radii = 0.5 * r * (nodes + 1.0)
        weights = 0.5 * r * weights
        total = 0.0
        n_evals = 0
        for t, w in zip(radii, weights):
            shell = sphere_mean(f, x, t, cfg)
            total += w * t ** (m - 1) * shell.value
            n_evals += shell.n_evals
        value = m / r**m * total
        return MeanEstimate(value=value, std_error=0.0, n_evals=n_evals, method=QuadMethod.DETERMINISTIC)

    def block(rng: np.random.Generator, size: int) -> BlockStats:
        # radius density proportional to t^{m-1} on (0, r)
        radii = r * rng.random(size) ** (1.0 / m)
        points = x + radii[:, None] * uniform_directions(rng, size, m)
        return BlockStats.from_samples(_values(f, points))

    stats = merge_all(run_blocks(block, cfg.samples, cfg.block_size, cfg.seed, (BALL_STREAM,), cfg.workers))
    return MeanEstimate(value=stats.mean, std_error=stats.std_error, n_evals=stats.count, method=QuadMethod.MONTE_CARLO)


def surface_mean(f: Field, x, r: float, surface: Surface, cfg: Optional[QuadConfig] = None) -> MeanEstimate:
    if surface == Surface.SPHERE:
        return sphere_mean(f, x, r, cfg)
    return ball_mean(f, x, r, cfg)


def identity_residual(
    spec: SolutionSpec,
    x,
    r: float,
    surface: Surface,
    cfg: Optional[QuadConfig] = None,
    tol: Optional[float] = None,
) -> CheckReport:
    """|M(f, x, r) - a(k r) f(x)| for a catalog solution, sphere or ball."""
    tol = settings.IDENTITY_TOLERANCE if tol is None else tol
    x = _centre(x)
    k = solutions.wavenumber(spec)
    kind = CoeffKind(surface=surface, equation=spec.equation)

    estimate = surface_mean(solutions.as_field(spec), x, r, surface, cfg)
    coefficient = float(coeffs.mean_coeff(kind, k * r, spec.m))
    centre_value = float(solutions.evaluate(spec, x))
    residual = abs(estimate.value - coefficient * centre_value)
    threshold = tol + 3.0 * estimate.std_error

    logger.debug("identity %s %s r=%s: residual %.3e (threshold %.3e)", kind.label, spec.family.value, r, residual, threshold)
    return CheckReport.build(
        name=f"identity-{surface.value}",
        residuals=[(f"|M - a({kind.label}) f(x)|", residual, threshold)],
        tolerance=tol,
        meta={
            "family": spec.family.value,
            "equation": spec.equation.value,
            "m": spec.m,
            "x": x.tolist(),
            "r": r,
            "mean": estimate.value,
            "std_error": estimate.std_error,
            "coefficient": coefficient,
            "method": estimate.method.value,
        },
    )


def epd_residual(target: Target, x, r: float, h: float, cfg: Optional[QuadConfig] = None) -> float:
    """M_rr + (m-1)/r M_r - lap_x M by central differences in r and in each coordinate of x."""
    if not r > h > 0:
        raise DomainError(f"need r > h > 0, got r={r}, h={h}")
    cfg = cfg or QuadConfig()
    f = field_of(target)
    x = _centre(x)
    m = x.size

    def mean(centre: np.ndarray, radius: float) -> float:
        # a fixed seed gives common random numbers across the stencil in the Monte Carlo case
        return sphere_mean(f, centre, radius, cfg).value

    m0 = mean(x, r)
    m_plus, m_minus = mean(x, r + h), mean(x, r - h)
    m_rr = (m_plus - 2.0 * m0 + m_minus) / (h * h)
    m_r = (m_plus - m_minus) / (2.0 * h)

    lap = 0.0
    for i in range(m):
        e = np.zeros(m)
        e[i] = h
        lap += (mean(x + e, r) - 2.0 * m0 + mean(x - e, r)) / (h * h)
    return m_rr + (m - 1) / r * m_r - lap


def eigenfunction_mean(bc: BoundaryCondition, n: int, radius: float = 1.0, cfg: Optional[QuadConfig] = None) -> MeanEstimate:
    """Mean of the n-th radial disk eigenfunction about the origin: over the boundary circle
    for Dirichlet (vanishes since a_sphere(j_{0,n}) = 0), over the disk for Neumann
    (vanishes since a_ball(j_{1,n}) = 0)."""
    spec = SolutionSpec(equation=Equation.HELMHOLTZ, family=Family.DISK_EIGEN, m=2, bc=bc, n=n, radius=radius)
    surface = Surface.SPHERE if bc == BoundaryCondition.DIRICHLET else Surface.BALL
    return surface_mean(solutions.as_field(spec), np.zeros(2), radius, surface, cfg)
