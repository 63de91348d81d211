"""Self-contained special functions: Gamma at half-integers, J_nu, I_nu, zeros of J_nu.

J_nu is evaluated on three bands:

* ``z <= SERIES_LIMIT``: ascending series, no cancellation worth mentioning;
* ``SERIES_LIMIT < z < max(20, 2 nu^2)``: Miller's backward recurrence normalised with
  the Neumann sum ``(z/2)^nu = sum_k (nu+2k) Gamma(nu+k)/k! J_{nu+2k}(z)``;
* beyond that: Hankel's asymptotic expansion, truncated at its smallest term.

I_nu only needs the ascending series, whose terms are all positive.
All functions accept a scalar or an array for ``z`` and return the same shape.
"""

import logging
import math
from functools import lru_cache
from typing import Tuple, Union

import numpy as np

from backend.models.errors import DomainError, SearchError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

SERIES_LIMIT = 5.0
TRUNCATION = 1e-17
I_OVERFLOW = 700.0
MAX_SERIES_TERMS = 5000
MAX_ASYMPTOTIC_TERMS = 80
RESCALE_ABOVE = 1e250


def _is_half_integer(x: float) -> bool:
    twice = 2.0 * x
    return abs(twice - round(twice)) <= 1e-12


def gamma(x: float) -> float:
    """Gamma at positive half-integers by recursion from Gamma(1) and Gamma(1/2)."""
    if not x > 0 or not _is_half_integer(x):
        raise DomainError(f"gamma is defined here for positive half-integers only, got {x}")
    if round(2.0 * x) % 2 == 0:
        value, t = 1.0, 1.0
    else:
        value, t = math.sqrt(math.pi), 0.5
    while t < x - 0.25:
        value *= t
        t += 1.0
    return value


def _gamma_any(x: float) -> float:
    return gamma(x) if _is_half_integer(x) else math.gamma(x)


def _prepare(nu: float, z: ArrayLike) -> Tuple[float, np.ndarray, tuple]:
    nu = float(nu)
    if not math.isfinite(nu) or nu < 0:
        raise DomainError(f"order must be a finite nonnegative number, got {nu}")
    arr = np.asarray(z, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("argument must be nonnegative")
    return nu, np.atleast_1d(arr).ravel(), arr.shape


def _finish(values: np.ndarray, shape: tuple) -> ArrayLike:
    if shape == ():
        return float(values[0])
    return values.reshape(shape)


def _reduced_series(nu: float, z: np.ndarray, sign: float) -> np.ndarray:
    """sum_k sign^k (z^2/4)^k / (k! (nu+1)_k), i.e. Gamma(nu+1) (2/z)^nu times J_nu or I_nu."""
    q = 0.25 * z * z
    q_max = float(q.max()) if q.size else 0.0
    term = np.ones_like(z)
    total = np.ones_like(z)
    k = 0
    while True:
        k += 1
        term = term * (sign * q / (k * (k + nu)))
        total = total + term
        # terms decrease from here on, and the alternating/geometric tail is below the last term
        if k * (k + nu) > q_max and np.all(np.abs(term) <= TRUNCATION * np.abs(total)):
            return total
        if k >= MAX_SERIES_TERMS:
            raise SearchError(f"ascending series did not converge for nu={nu}")


def _series_prefactor(nu: float, z: np.ndarray) -> np.ndarray:
    return np.power(0.5 * z, nu) / _gamma_any(nu + 1.0)


def _neumann_weights(nu: float, count: int) -> np.ndarray:
    # w_0 = Gamma(nu+1); w_j = (nu+2j) Gamma(nu+j)/j! for j >= 1
    weights = np.empty(count + 1)
    weights[0] = _gamma_any(nu + 1.0)
    g = weights[0]
    for j in range(1, count + 1):
        if j > 1:
            g *= (nu + j - 1.0) / j
        weights[j] = (nu + 2.0 * j) * g
    return weights


def _miller(nu: float, z: np.ndarray) -> np.ndarray:
    z_max = float(z.max())
    start = int(z_max + 14.0 * z_max ** (1.0 / 3.0) + 10.0)
    start += start % 2
    weights = _neumann_weights(nu, start // 2)

    f_next = np.zeros_like(z)
    f_cur = np.full_like(z, 1e-30)
    total = np.zeros_like(z)
    for k in range(start, 0, -1):
        if k % 2 == 0:
            total += weights[k // 2] * f_cur
        f_prev = (2.0 * (nu + k) / z) * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        big = np.abs(f_cur) > RESCALE_ABOVE
        if big.any():
            scale = np.where(big, 1.0 / RESCALE_ABOVE, 1.0)
            f_cur *= scale
            f_next *= scale
            total *= scale
    total += weights[0] * f_cur
    return f_cur * np.power(0.5 * z, nu) / total


def _hankel(nu: float, z: np.ndarray) -> np.ndarray:
    mu4 = 4.0 * nu * nu
    term = np.ones_like(z)
    p = np.ones_like(z)
    q = np.zeros_like(z)
    previous = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    for k in range(1, MAX_ASYMPTOTIC_TERMS + 1):
        term = term * (mu4 - (2.0 * k - 1.0) ** 2) / (8.0 * k * z)
        magnitude = np.abs(term)
        active &= magnitude < previous
        contribution = np.where(active, term, 0.0)
        if k % 2 == 1:
            q += contribution if (k - 1) % 4 == 0 else -contribution
        else:
            p += contribution if k % 4 == 0 else -contribution
        previous = magnitude
        if not active.any():
            break
    omega = z - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * z)) * (p * np.cos(omega) - q * np.sin(omega))


def asymptotic_crossover(nu: float) -> float:
    return max(20.0, 2.0 * nu * nu)


def bessel_j(nu: float, z: ArrayLike) -> ArrayLike:
    """Bessel function of the first kind J_nu(z) for nu >= 0, z >= 0."""
    nu, flat, shape = _prepare(nu, z)
    out = np.empty_like(flat)
    crossover = asymptotic_crossover(nu)

    low = flat <= SERIES_LIMIT
    high = flat >= crossover
    mid = ~(low | high)
    if low.any():
        zl = flat[low]
        out[low] = _series_prefactor(nu, zl) * _reduced_series(nu, zl, -1.0)
    if mid.any():
        out[mid] = _miller(nu, flat[mid])
    if high.any():
        out[high] = _hankel(nu, flat[high])
    return _finish(out, shape)


def bessel_j_series(nu: float, z: ArrayLike) -> ArrayLike:
    """The ascending series alone, exposed for seam checks."""
    nu, flat, shape = _prepare(nu, z)
    return _finish(_series_prefactor(nu, flat) * _reduced_series(nu, flat, -1.0), shape)


def bessel_j_recurrence(nu: float, z: ArrayLike) -> ArrayLike:
    """Miller's backward recurrence alone (z > 0), exposed for seam checks."""
    nu, flat, shape = _prepare(nu, z)
    if np.any(flat == 0):
        raise DomainError("backward recurrence needs z > 0")
    return _finish(_miller(nu, flat), shape)


def bessel_j_asymptotic(nu: float, z: ArrayLike) -> ArrayLike:
    """Hankel's expansion alone (z > 0), exposed for seam checks."""
    nu, flat, shape = _prepare(nu, z)
    if np.any(flat == 0):
        raise DomainError("asymptotic expansion needs z > 0")
    return _finish(_hankel(nu, flat), shape)


def _log_scaled_i(nu: float, z: np.ndarray) -> np.ndarray:
    # log of e^{-z} I_nu(z), summed in log space for arguments past the overflow guard
    q = 0.25 * z * z
    log_term = nu * np.log(0.5 * z) - math.lgamma(nu + 1.0) - z
    total = np.exp(log_term)
    k = 0
    while True:
        k += 1
        log_term = log_term + np.log(q) - math.log(k * (k + nu))
        term = np.exp(log_term)
        total += term
        if k * (k + nu) > float(q.max()) and np.all(term <= TRUNCATION * total):
            return np.log(total)
        if k >= MAX_SERIES_TERMS:
            raise SearchError(f"scaled I series did not converge for nu={nu}")


def bessel_i(nu: float, z: ArrayLike, scaled: bool = False) -> ArrayLike:
    """Modified Bessel function I_nu(z); ``scaled=True`` returns e^{-z} I_nu(z)."""
    nu, flat, shape = _prepare(nu, z)
    out = np.empty_like(flat)
    small = flat <= I_OVERFLOW
    if small.any():
        zs = flat[small]
        values = _series_prefactor(nu, zs) * _reduced_series(nu, zs, 1.0)
        out[small] = values * np.exp(-zs) if scaled else values
    if (~small).any():
        log_scaled = _log_scaled_i(nu, flat[~small])
        with np.errstate(over="ignore"):
            out[~small] = np.exp(log_scaled) if scaled else np.exp(log_scaled + flat[~small])
    return _finish(out, shape)


def normalized_bessel(nu: float, z: ArrayLike, modified: bool = False) -> ArrayLike:
    """Gamma(nu+1) (2/z)^nu J_nu(z) (or I_nu), equal to 1 at z = 0.

    The removable singularity at the origin is handled by the series, which is used
    directly on the series band.
    """
    nu, flat, shape = _prepare(nu, z)
    out = np.empty_like(flat)
    limit = I_OVERFLOW if modified else SERIES_LIMIT
    low = flat <= limit
    if low.any():
        out[low] = _reduced_series(nu, flat[low], 1.0 if modified else -1.0)
    if (~low).any():
        zh = flat[~low]
        if modified:
            log_value = _log_scaled_i(nu, zh) + zh + math.lgamma(nu + 1.0) - nu * np.log(0.5 * zh)
            with np.errstate(over="ignore"):
                out[~low] = np.exp(log_value)
        else:
            out[~low] = bessel_j(nu, zh) * _gamma_any(nu + 1.0) / np.power(0.5 * zh, nu)
    return _finish(out, shape)


def _bessel_j_prime(nu: float, z: float) -> float:
    return (nu / z) * bessel_j(nu, z) - bessel_j(nu + 1.0, z)


def _scan_bracket(nu: float, n: int) -> Tuple[float, float]:
    # J_nu > 0 on (0, nu]; zeros are more than 2.5 apart, so a 0.25 step sees each sign change
    step = 0.25
    lo = max(nu, step)
    f_lo = bessel_j(nu, lo)
    found = 0
    while True:
        hi = lo + step
        f_hi = bessel_j(nu, hi)
        if f_lo == 0.0 or f_lo * f_hi < 0:
            found += 1
            if found == n:
                return lo, hi
        lo, f_lo = hi, f_hi


@lru_cache(maxsize=500)
def bessel_j_zero(nu: float, n: int) -> float:
    """The n-th positive zero j_{nu,n} of J_nu."""
    nu = float(nu)
    if nu < 0 or not math.isfinite(nu):
        raise DomainError(f"order must be nonnegative, got {nu}")
    if int(n) != n or n < 1:
        raise DomainError(f"zero index must be a positive integer, got {n}")
    n = int(n)

    beta = (n + 0.5 * nu - 0.25) * math.pi
    guess = beta - (4.0 * nu * nu - 1.0) / (8.0 * beta)

    bracket = None
    for half_width in (0.5, 0.75, 1.0, 1.25):
        lo, hi = max(guess - half_width, 1e-12), guess + half_width
        if bessel_j(nu, lo) * bessel_j(nu, hi) < 0:
            bracket = (lo, hi)
            break
    if bracket is None:
        logger.debug("McMahon bracket failed for nu=%s n=%s, scanning", nu, n)
        bracket = _scan_bracket(nu, n)

    lo, hi = bracket
    f_lo = bessel_j(nu, lo)
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        f_mid = bessel_j(nu, mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid

    x = 0.5 * (lo + hi)
    for _ in range(50):
        f_x = bessel_j(nu, x)
        step = f_x / _bessel_j_prime(nu, x)
        candidate = x - step
        if not lo < candidate < hi:
            # Newton left the bracket: fall back to a bisection step
            if f_lo * f_x < 0:
                hi = x
            else:
                lo, f_lo = x, f_x
            candidate = 0.5 * (lo + hi)
        x = candidate
        if abs(step) <= 1e-15 * x:
            return x
    raise SearchError(f"Newton refinement of j_({nu},{n}) did not converge")


def unit_ball_volume(m: int) -> float:
    """omega_m = 2 pi^{m/2} / (m Gamma(m/2))."""
    if int(m) != m or m < 1:
        raise DomainError(f"dimension must be a positive integer, got {m}")
    return 2.0 * math.pi ** (0.5 * m) / (m * gamma(0.5 * m))
