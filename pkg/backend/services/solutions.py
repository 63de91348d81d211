"""Closed-form solutions of the Helmholtz and modified Helmholtz equations.

Every catalog member is vectorised: ``evaluate`` takes one point of shape (m,) or a
stack of shape (n, m).
"""

import logging
from typing import Callable, Union

import numpy as np

from backend.models.errors import DomainError
from backend.models.schemas import BoundaryCondition, Equation, Family, SolutionSpec
from backend.services import coeffs, specfun

logger = logging.getLogger(__name__)

Field = Callable[[np.ndarray], np.ndarray]


def wavenumber(spec: SolutionSpec) -> float:
    """lambda or mu of the solution; for disk eigenfunctions lambda = j_{0,n}/R or j_{1,n}/R."""
    if spec.family == Family.DISK_EIGEN:
        nu = 0.0 if spec.bc == BoundaryCondition.DIRICHLET else 1.0
        return specfun.bessel_j_zero(nu, spec.n) / spec.radius
    return float(spec.wavenumber)


def _points(spec: SolutionSpec, x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1:] != (spec.m,):
        raise DomainError(f"point dimension {pts.shape[-1:]} does not match m = {spec.m}")
    return pts


def evaluate(spec: SolutionSpec, x) -> Union[float, np.ndarray]:
    pts = _points(spec, x)
    k = wavenumber(spec)

    if spec.family == Family.RADIAL:
        kind = coeffs.SPHERE_HELMHOLTZ if spec.equation == Equation.HELMHOLTZ else coeffs.SPHERE_MODIFIED
        values = coeffs.mean_coeff(kind, k * np.linalg.norm(pts, axis=-1), spec.m)
    elif spec.family == Family.PLANE:
        projection = pts @ np.asarray(spec.direction)
        if spec.equation == Equation.HELMHOLTZ:
            values = np.cos(k * projection + spec.phase)
        else:
            values = np.exp(k * projection)
    elif spec.family == Family.SINH:
        values = np.sinh(k * (pts @ np.asarray(spec.direction)) + spec.phase)
    else:
        values = specfun.bessel_j(0.0, k * np.linalg.norm(pts, axis=-1))

    values = np.asarray(values, dtype=float)
    return float(values) if values.ndim == 0 else values


def as_field(spec: SolutionSpec) -> Field:
    """Wrap a catalog member as a vectorised callable on (n, m) point stacks."""

    def field(points: np.ndarray) -> np.ndarray:
        return np.atleast_1d(evaluate(spec, points))

    field.__name__ = f"{spec.family.value}_{spec.equation.value}"
    return field


def helmholtz_sign(equation: Equation) -> float:
    # residual of lap u + sign * k^2 u
    return 1.0 if equation == Equation.HELMHOLTZ else -1.0


def laplacian(f: Field, x, h: float) -> float:
    """Central-difference Laplacian of a vectorised field at one point."""
    if not h > 0:
        raise DomainError(f"step must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    m = x.size
    shifts = np.vstack([np.eye(m) * h, -np.eye(m) * h])
    stencil = np.vstack([x[None, :], x[None, :] + shifts])
    values = np.atleast_1d(f(stencil))
    centre = values[0]
    return float((values[1:].sum() - 2.0 * m * centre) / (h * h))


def operator_residual(f: Field, x, k: float, equation: Equation, h: float) -> float:
    """(lap f + k^2 f)(x) for Helmholtz or (lap f - k^2 f)(x) for the modified equation."""
    centre = float(np.atleast_1d(f(np.asarray(x, dtype=float)[None, :]))[0])
    return laplacian(f, x, h) + helmholtz_sign(equation) * k * k * centre


def pde_residual(spec: SolutionSpec, x, h: float) -> float:
    pts = _points(spec, x)
    residual = operator_residual(as_field(spec), pts, wavenumber(spec), spec.equation, h)
    logger.debug("pde residual %s at %s, h=%s: %.3e", spec.family.value, pts, h, residual)
    return residual
