"""Weighted walk on spheres for the Dirichlet problem of lap v - mu^2 v = 0.

From the sphere identity M(v, y, d) = a~(mu d) v(y), each jump to a uniform point of
the largest inscribed sphere multiplies the walk weight by 1 / a~(mu d) < 1. A walk
stops inside the eps-shell and scores weight * g(nearest boundary point).
"""

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from backend.models.errors import DomainError
from backend.models.schemas import WosConfig, WosEstimate, WosFieldEntry
from backend.services import coeffs
from backend.services.geometry import DomainGeometry
from backend.services.sampling import BlockStats, merge_all, run_blocks, uniform_directions

logger = logging.getLogger(__name__)

BoundaryFunction = Callable[[np.ndarray], np.ndarray]


class WalkOnSpheresSolver:
    def __init__(self, geom: DomainGeometry, g: BoundaryFunction, mu: float, cfg: Optional[WosConfig] = None):
        if not mu > 0:
            raise DomainError(f"mu must be positive, got {mu}")
        self.geom = geom
        self.g = g
        self.mu = float(mu)
        self.cfg = cfg or WosConfig()

    def _step_weight(self, d: np.ndarray) -> np.ndarray:
        return 1.0 / coeffs.mean_coeff(coeffs.SPHERE_MODIFIED, self.mu * d, self.geom.m)

    def _walk_block(self, x: np.ndarray, rng: np.random.Generator, size: int) -> Tuple[BlockStats, int, int]:
        m = self.geom.m
        eps = self.cfg.eps
        pos = np.repeat(x[None, :], size, axis=0)
        weight = np.ones(size)
        scores = np.zeros(size)
        active = np.arange(size)
        truncated = 0
        total_steps = 0

        for step in range(self.cfg.max_steps + 1):
            if active.size == 0:
                break
            d = self.geom.distance(pos[active])
            done = d <= eps
            if step == self.cfg.max_steps:
                truncated = int(np.count_nonzero(~done))
                done[:] = True
            if done.any():
                finished = active[done]
                scores[finished] = weight[finished] * np.asarray(self.g(self.geom.project(pos[finished])), dtype=float)
            active = active[~done]
            d = d[~done]
            if active.size:
                weight[active] *= self._step_weight(d)
                pos[active] += d[:, None] * uniform_directions(rng, active.size, m)
                total_steps += active.size

        return BlockStats.from_samples(scores), truncated, total_steps

    def solve(self, x, key: Tuple[int, ...] = (0,)) -> WosEstimate:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.geom.m:
            raise DomainError(f"point has dimension {x.size}, domain has m = {self.geom.m}")
        start = self.geom.distance(x)
        if start <= self.cfg.eps:
            raise DomainError(f"point {x.tolist()} lies outside the domain or within eps of its boundary")

        cfg = self.cfg
        blocks = run_blocks(
            lambda rng, size: self._walk_block(x, rng, size),
            cfg.n_walks,
            cfg.block_size,
            cfg.seed,
            key,
            cfg.workers,
        )
        stats = merge_all([b[0] for b in blocks])
        truncated = sum(b[1] for b in blocks)
        steps = sum(b[2] for b in blocks)
        valid = truncated <= settings.WOS_TRUNCATION_LIMIT * cfg.n_walks
        if not valid:
            logger.warning("%d of %d walks hit max_steps=%d at %s", truncated, cfg.n_walks, cfg.max_steps, x.tolist())

        logger.debug("wos at %s: %.8f +- %.2e, %.2f steps per walk", x.tolist(), stats.mean, stats.std_error, steps / cfg.n_walks)
        return WosEstimate(
            value=stats.mean,
            std_error=stats.std_error,
            n_evals=stats.count,
            n_walks=cfg.n_walks,
            truncated=truncated,
            valid=valid,
            mean_steps=steps / cfg.n_walks,
        )

    def field(self, grid: Sequence[Sequence[float]]) -> List[WosFieldEntry]:
        entries = []
        for index, point in enumerate(grid):
            point = [float(c) for c in point]
            try:
                entries.append(WosFieldEntry(point=point, estimate=self.solve(point, key=(index,))))
            except DomainError as e:
                logger.warning("skipping grid point %s: %s", point, e)
                entries.append(WosFieldEntry(point=point, error=str(e)))
        return entries


def wos_solve(geom: DomainGeometry, g: BoundaryFunction, mu: float, x, cfg: Optional[WosConfig] = None) -> WosEstimate:
    return WalkOnSpheresSolver(geom, g, mu, cfg).solve(x)


def wos_field(
    geom: DomainGeometry, g: BoundaryFunction, mu: float, grid: Sequence[Sequence[float]], cfg: Optional[WosConfig] = None
) -> List[WosFieldEntry]:
    return WalkOnSpheresSolver(geom, g, mu, cfg).field(grid)


def constant_boundary(c: float) -> BoundaryFunction:
    def g(points: np.ndarray) -> np.ndarray:
        return np.full(len(points), float(c))

    return g


def exponential_boundary(direction: Sequence[float]) -> BoundaryFunction:
    """Trace of exp(d . x); with mu = |d| the extension is an exact solution."""
    d = np.asarray(direction, dtype=float)

    def g(points: np.ndarray) -> np.ndarray:
        return np.exp(points @ d)

    return g


def parse_boundary(text: str, m: int) -> BoundaryFunction:
    """``const:<c>`` or ``exp:<d1,...,dm>``."""
    kind, _, payload = text.partition(":")
    try:
        if kind == "const":
            return constant_boundary(float(payload))
        if kind == "exp":
            direction = [float(c) for c in payload.split(",")]
            if len(direction) != m:
                raise DomainError(f"exp boundary needs {m} components, got {len(direction)}")
            return exponential_boundary(direction)
    except ValueError as e:
        if isinstance(e, DomainError):
            raise
        raise DomainError(f"malformed boundary {text!r}: {e}") from e
    raise DomainError(f"unknown boundary {text!r}; use const:<c> or exp:<d1,...>")
