"""Seeded block streams, sphere directions and mergeable sample statistics.

Random work is cut into fixed-size blocks. Block ``b`` of stream ``key`` draws from
``SeedSequence(seed, spawn_key=key + (b,))`` and the block statistics are merged in
block order, so a result depends on the seed and the sample count only, never on the
number of workers that produced it.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, NamedTuple, Sequence, Tuple, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")


class BlockStats(NamedTuple):
    count: int
    mean: float
    m2: float

    @classmethod
    def from_samples(cls, values: np.ndarray) -> "BlockStats":
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size == 0:
            return cls(0, 0.0, 0.0)
        mean = float(values.mean())
        return cls(int(values.size), mean, float(np.sum((values - mean) ** 2)))

    def merge(self, other: "BlockStats") -> "BlockStats":
        if self.count == 0:
            return other
        if other.count == 0:
            return self
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / count
        return BlockStats(count, mean, m2)

    @property
    def std_error(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.count - 1) / self.count)


def merge_all(blocks: Sequence[BlockStats]) -> BlockStats:
    total = BlockStats(0, 0.0, 0.0)
    for block in blocks:
        total = total.merge(block)
    return total


def block_sizes(total: int, block_size: int) -> List[int]:
    full, rest = divmod(total, block_size)
    return [block_size] * full + ([rest] if rest else [])


def block_rng(seed: int, key: Tuple[int, ...], block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key) + (block,)))


def run_blocks(
    work: Callable[[np.random.Generator, int], T],
    total: int,
    block_size: int,
    seed: int,
    key: Tuple[int, ...] = (),
    workers: int = 1,
) -> List[T]:
    """Run ``work(rng, size)`` on every block and return the results in block order."""
    sizes = block_sizes(total, block_size)

    def run(index: int) -> T:
        return work(block_rng(seed, key, index), sizes[index])

    logger.debug("running %d blocks (seed=%s, key=%s, workers=%d)", len(sizes), seed, key, workers)
    if workers <= 1 or len(sizes) <= 1:
        return [run(i) for i in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(len(sizes))))


def uniform_directions(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    """Uniform points on the unit sphere in R^m: normalised standard Gaussian vectors."""
    g = rng.standard_normal((n, m))
    norms = np.linalg.norm(g, axis=1)
    while np.any(norms == 0):
        zero = norms == 0
        g[zero] = rng.standard_normal((int(zero.sum()), m))
        norms = np.linalg.norm(g, axis=1)
    return g / norms[:, None]


def spread_directions(n: int, m: int, seed: int = 0) -> np.ndarray:
    """Deterministic, well spread unit vectors: equispaced angles (m=2), golden spiral (m=3),
    seeded Gaussian directions otherwise."""
    if m == 2:
        theta = 2.0 * math.pi * np.arange(n) / n
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if m == 3:
        k = np.arange(n) + 0.5
        z = 1.0 - 2.0 * k / n
        rho = np.sqrt(1.0 - z * z)
        longitude = math.pi * (3.0 - math.sqrt(5.0)) * k
        return np.column_stack([rho * np.cos(longitude), rho * np.sin(longitude), z])
    return uniform_directions(np.random.default_rng(seed), n, m)
