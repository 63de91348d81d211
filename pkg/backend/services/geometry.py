"""Bounded domains for walk on spheres and maximum principle audits.

``distance`` is signed (positive inside) and never exceeds the true distance to the
boundary: exact for balls and boxes, a lower bound for CSG combinations.
"""

import itertools
import logging
from abc import ABC, abstractmethod
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from backend.models.errors import DomainError

logger = logging.getLogger(__name__)

BOUNDARY_TOLERANCE = 1e-12
MAX_SAMPLING_ROUNDS = 200


def _stack(points, m: int) -> Tuple[np.ndarray, bool]:
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != m:
        raise DomainError(f"points have dimension {pts.shape[1]}, domain has m = {m}")
    return pts, single


class DomainGeometry(ABC):
    m: int

    @abstractmethod
    def _distance(self, pts: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _project(self, pts: np.ndarray) -> np.ndarray:
        ...

    @property
    @abstractmethod
    def bbox(self) -> Tuple[np.ndarray, np.ndarray]:
        ...

    @abstractmethod
    def _boundary_candidates(self, n: int, rng: np.random.Generator) -> np.ndarray:
        ...

    def vertices(self) -> np.ndarray:
        return np.empty((0, self.m))

    def distance(self, points):
        pts, single = _stack(points, self.m)
        d = self._distance(pts)
        return float(d[0]) if single else d

    def project(self, points):
        pts, single = _stack(points, self.m)
        p = self._project(pts)
        return p[0] if single else p

    def contains(self, points):
        d = self.distance(points)
        return d > 0 if np.ndim(d) else bool(d > 0)

    def sample_boundary(self, n: int, rng: np.random.Generator, include_vertices: bool = True) -> np.ndarray:
        samples = self._boundary_candidates(n, rng)
        if include_vertices:
            samples = np.vstack([self.vertices(), samples])
        return samples

    def sample_interior(self, n: int, seed: int = 0) -> np.ndarray:
        """Scrambled Halton points of the bounding box that fall inside the domain."""
        lo, hi = self.bbox
        sampler = qmc.Halton(d=self.m, scramble=True, seed=seed)
        kept: List[np.ndarray] = []
        count = 0
        for _ in range(MAX_SAMPLING_ROUNDS):
            batch = lo + (hi - lo) * sampler.random(max(2 * (n - count), 64))
            batch = batch[self._distance(batch) > 0]
            kept.append(batch)
            count += len(batch)
            if count >= n:
                return np.vstack(kept)[:n]
        raise DomainError("could not draw interior samples; is the domain empty?")


class Ball(DomainGeometry):
    def __init__(self, center: Sequence[float], radius: float):
        self.center = np.asarray(center, dtype=float)
        if not radius > 0:
            raise DomainError(f"ball radius must be positive, got {radius}")
        self.radius = float(radius)
        self.m = self.center.size

    def _distance(self, pts):
        return self.radius - np.linalg.norm(pts - self.center, axis=1)

    def _project(self, pts):
        offset = pts - self.center
        norms = np.linalg.norm(offset, axis=1)
        at_centre = norms == 0
        offset[at_centre] = np.eye(self.m)[0]
        norms[at_centre] = 1.0
        return self.center + self.radius * offset / norms[:, None]

    @property
    def bbox(self):
        return self.center - self.radius, self.center + self.radius

    def _boundary_candidates(self, n, rng):
        g = rng.standard_normal((n, self.m))
        return self.center + self.radius * g / np.linalg.norm(g, axis=1)[:, None]

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


class Box(DomainGeometry):
    def __init__(self, lo: Sequence[float], hi: Sequence[float]):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise DomainError("box needs lo < hi componentwise")
        self.m = self.lo.size

    def _distance(self, pts):
        gaps = np.minimum(pts - self.lo, self.hi - pts)
        inside = gaps.min(axis=1)
        outside = np.linalg.norm(np.maximum(np.maximum(self.lo - pts, pts - self.hi), 0.0), axis=1)
        return np.where(inside > 0, inside, -outside)

    def _project(self, pts):
        projected = np.clip(pts, self.lo, self.hi)
        gaps_lo = pts - self.lo
        gaps_hi = self.hi - pts
        gaps = np.minimum(gaps_lo, gaps_hi)
        inside = gaps.min(axis=1) > 0
        if inside.any():
            rows = np.flatnonzero(inside)
            axes = gaps[inside].argmin(axis=1)
            to_lo = gaps_lo[rows, axes] <= gaps_hi[rows, axes]
            projected[rows, axes] = np.where(to_lo, self.lo[axes], self.hi[axes])
        return projected

    @property
    def bbox(self):
        return self.lo.copy(), self.hi.copy()

    def vertices(self):
        return np.array(list(itertools.product(*zip(self.lo, self.hi))), dtype=float)

    def _boundary_candidates(self, n, rng):
        widths = self.hi - self.lo
        areas = np.array([np.prod(np.delete(widths, i)) for i in range(self.m)])
        faces = rng.choice(2 * self.m, size=n, p=np.tile(areas, 2) / (2 * areas.sum()))
        pts = self.lo + widths * rng.random((n, self.m))
        axes = faces % self.m
        pts[np.arange(n), axes] = np.where(faces < self.m, self.lo[axes], self.hi[axes])
        return pts

    def __repr__(self):
        return f"Box(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


class _Composite(DomainGeometry):
    def __init__(self, members: Sequence[DomainGeometry]):
        if len(members) < 2:
            raise DomainError("a CSG combination needs at least two members")
        dims = {member.m for member in members}
        if len(dims) != 1:
            raise DomainError(f"members live in different dimensions: {sorted(dims)}")
        self.members = list(members)
        self.m = dims.pop()

    def _member_distances(self, pts):
        return np.stack([member._distance(pts) for member in self.members])

    @abstractmethod
    def _on_boundary(self, others: np.ndarray) -> np.ndarray:
        ...

    def _filter(self, index: int, pts: np.ndarray) -> np.ndarray:
        if len(pts) == 0:
            return pts
        others = np.stack([other._distance(pts) for j, other in enumerate(self.members) if j != index])
        return pts[self._on_boundary(others)]

    def vertices(self):
        kept = [self._filter(i, member.vertices()) for i, member in enumerate(self.members)]
        return np.vstack(kept) if kept else np.empty((0, self.m))

    def _boundary_candidates(self, n, rng):
        kept: List[np.ndarray] = []
        count = 0
        for _ in range(MAX_SAMPLING_ROUNDS):
            for i, member in enumerate(self.members):
                batch = self._filter(i, member._boundary_candidates(n, rng))
                kept.append(batch)
                count += len(batch)
            if count >= n:
                return np.vstack(kept)[:n]
        raise DomainError("could not sample the boundary of the combination")


class Union(_Composite):
    """Union: max of member distances, a lower bound on the true distance."""

    def _distance(self, pts):
        return self._member_distances(pts).max(axis=0)

    def _project(self, pts):
        dists = self._member_distances(pts)
        nearest = dists.argmax(axis=0)
        out = np.empty_like(pts)
        for i, member in enumerate(self.members):
            rows = nearest == i
            if rows.any():
                out[rows] = member._project(pts[rows])
        return out

    def _on_boundary(self, others):
        return np.all(others <= BOUNDARY_TOLERANCE, axis=0)

    @property
    def bbox(self):
        boxes = [member.bbox for member in self.members]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)


class Intersection(_Composite):
    """Intersection: min of member distances."""

    def _distance(self, pts):
        return self._member_distances(pts).min(axis=0)

    def _project(self, pts):
        dists = self._member_distances(pts)
        nearest = dists.argmin(axis=0)
        out = np.empty_like(pts)
        for i, member in enumerate(self.members):
            rows = nearest == i
            if rows.any():
                out[rows] = member._project(pts[rows])
        return out

    def _on_boundary(self, others):
        return np.all(others >= -BOUNDARY_TOLERANCE, axis=0)

    @property
    def bbox(self):
        boxes = [member.bbox for member in self.members]
        return np.max([b[0] for b in boxes], axis=0), np.min([b[1] for b in boxes], axis=0)


def make_shape(
    shape: str,
    m: int,
    radius: float = 1.0,
    center: Optional[Sequence[float]] = None,
    lo: Optional[Sequence[float]] = None,
    hi: Optional[Sequence[float]] = None,
) -> DomainGeometry:
    """Build a primitive from CLI/HTTP parameters: unit ball or [-1, 1]^m by default."""
    if shape == "ball":
        return Ball(center if center is not None else np.zeros(m), radius)
    if shape == "box":
        return Box(lo if lo is not None else -np.ones(m), hi if hi is not None else np.ones(m))
    raise DomainError(f"unknown shape: {shape}")
