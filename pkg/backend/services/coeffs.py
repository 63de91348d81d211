"""Mean value coefficients a(t) relating spherical and ball means of a solution to its centre value.

All four coefficients depend on the scaled radius ``t = lambda r`` (or ``mu r``) only:

    sphere/helmholtz  Gamma(m/2)   J_{(m-2)/2}(t) / (t/2)^{(m-2)/2}
    sphere/modified   Gamma(m/2)   I_{(m-2)/2}(t) / (t/2)^{(m-2)/2}
    ball/helmholtz    Gamma(m/2+1) J_{m/2}(t)     / (t/2)^{m/2}
    ball/modified     Gamma(m/2+1) I_{m/2}(t)     / (t/2)^{m/2}
"""

import math
from typing import Union

import numpy as np

from backend.models.errors import DomainError
from backend.models.schemas import CoeffKind, Equation, Surface
from backend.services import specfun

ArrayLike = Union[float, np.ndarray]

SPHERE_HELMHOLTZ = CoeffKind(surface=Surface.SPHERE, equation=Equation.HELMHOLTZ)
SPHERE_MODIFIED = CoeffKind(surface=Surface.SPHERE, equation=Equation.MODIFIED)
BALL_HELMHOLTZ = CoeffKind(surface=Surface.BALL, equation=Equation.HELMHOLTZ)
BALL_MODIFIED = CoeffKind(surface=Surface.BALL, equation=Equation.MODIFIED)
ALL_KINDS = (SPHERE_HELMHOLTZ, SPHERE_MODIFIED, BALL_HELMHOLTZ, BALL_MODIFIED)


def _check_dim(m: int) -> int:
    if int(m) != m or m < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {m}")
    return int(m)


def coeff_order(surface: Surface, m: int) -> float:
    """Bessel order behind the coefficient: (m-2)/2 for spheres, m/2 for balls."""
    return 0.5 * (m - 2) if surface == Surface.SPHERE else 0.5 * m


def mean_coeff(kind: CoeffKind, t: ArrayLike, m: int) -> ArrayLike:
    m = _check_dim(m)
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("scaled radius must be nonnegative")
    nu = coeff_order(kind.surface, m)
    return specfun.normalized_bessel(nu, t, modified=kind.equation == Equation.MODIFIED)


def mean_coeff_derivative(kind: CoeffKind, t: ArrayLike, m: int) -> ArrayLike:
    """d/dt of the sphere coefficients: (t/m) a_ball for modified, -(t/m) a_ball for Helmholtz."""
    if kind.surface != Surface.SPHERE:
        raise DomainError("derivatives are provided for sphere coefficients only")
    ball = CoeffKind(surface=Surface.BALL, equation=kind.equation)
    sign = 1.0 if kind.equation == Equation.MODIFIED else -1.0
    return sign * np.asarray(t, dtype=float) / m * mean_coeff(ball, t, m)


def coeff_first_zero(kind: CoeffKind, m: int) -> float:
    m = _check_dim(m)
    if kind.equation != Equation.HELMHOLTZ:
        raise DomainError("modified coefficients exceed 1 for t > 0 and have no zeros")
    return specfun.bessel_j_zero(coeff_order(kind.surface, m), 1)


def coeff_zeros(kind: CoeffKind, m: int, count: int) -> list:
    """The first ``count`` zeros of a Helmholtz coefficient (nodal radii of the radial solution)."""
    m = _check_dim(m)
    if kind.equation != Equation.HELMHOLTZ:
        raise DomainError("modified coefficients have no zeros")
    nu = coeff_order(kind.surface, m)
    return [specfun.bessel_j_zero(nu, k) for k in range(1, count + 1)]


def modified_asymptotic_constant(m: int) -> float:
    """Gamma(m/2) 2^{(m-3)/2} / sqrt(pi): the large-t constant of a~(t) r^{(m-1)/2} e^{-t}."""
    m = _check_dim(m)
    return specfun.gamma(0.5 * m) * 2.0 ** (0.5 * (m - 3)) / math.sqrt(math.pi)


def modified_growth_ratio(t: ArrayLike, m: int) -> ArrayLike:
    """a~_sphere(t) t^{(m-1)/2} e^{-t}, evaluated without overflow."""
    m = _check_dim(m)
    nu = 0.5 * (m - 2)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("growth ratio needs t > 0")
    scaled = specfun.bessel_i(nu, t, scaled=True)
    value = specfun.gamma(0.5 * m) * np.power(2.0 / t, nu) * scaled * np.power(t, 0.5 * (m - 1))
    return float(value) if value.ndim == 0 else value
