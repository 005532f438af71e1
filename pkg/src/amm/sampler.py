"""Alias-method sampling and reproducible, splittable random streams."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AllZeroWeights, NegativeWeight

__all__ = [
    "DiscreteDistribution",
    "RngStream",
    "build_alias",
    "alias_masses",
    "sample",
    "sample_many",
    "split_uniform",
    "rademacher_vector",
]


class RngStream:
    """A seeded random stream identified by ``(seed, stream_id)``.

    Backed by the counter-based Philox generator. The key is derived from the
    seed and the stream path with :class:`numpy.random.SeedSequence`, so two
    streams with the same identity produce the same numbers on every platform,
    and distinct ids give statistically independent streams. A stream is
    single-owner; hand each worker its own :meth:`child`.
    """

    def __init__(self, seed: int = 0, stream_id: int = 0, _path: tuple = ()):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._path = tuple(int(p) for p in _path)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self._path))
        self.gen = np.random.Generator(np.random.Philox(ss))

    def child(self, index: int) -> "RngStream":
        """Independent sub-stream; depends only on this stream's identity."""
        return RngStream(self.seed, self.stream_id, self._path + (index,))

    def __repr__(self):
        path = "".join(f"/{p}" for p in self._path)
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}{path})"

    def random(self, size=None):
        return self.gen.random(size)

    def integers(self, high, size=None):
        return self.gen.integers(0, high, size=size)

    def signs(self, size) -> np.ndarray:
        """I.i.d. uniform entries of {+1, -1} as float64."""
        bits = self.gen.integers(0, 2, size=size, dtype=np.int8)
        return 1.0 - 2.0 * bits


@dataclass(frozen=True)
class DiscreteDistribution:
    """A normalised probability vector with its Vose alias tables.

    Cell ``i`` keeps outcome ``i`` with probability ``alias_threshold[i]`` and
    otherwise yields ``alias_index[i]``.
    """

    probs: np.ndarray
    alias_index: np.ndarray
    alias_threshold: np.ndarray
    support: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.probs)


def build_alias(weights) -> DiscreteDistribution:
    """Vose's alias construction: one O(n) pass with a small and a large worklist."""
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.size == 0:
        raise AllZeroWeights("empty weight vector")
    if not np.all(np.isfinite(w)):
        raise NegativeWeight("weights must be finite")
    if np.any(w < 0):
        raise NegativeWeight(f"negative weight at index {int(np.argmin(w))}")
    total = w.sum()
    if total <= 0:
        raise AllZeroWeights("all weights are zero")

    probs = w / total
    n = len(probs)
    scaled = (probs * n).tolist()
    threshold = [1.0] * n
    alias = list(range(n))
    small = [i for i, s in enumerate(scaled) if s < 1.0]
    large = [i for i, s in enumerate(scaled) if s >= 1.0]
    while small and large:
        lo = small.pop()
        hi = large[-1]
        threshold[lo] = scaled[lo]
        alias[lo] = hi
        scaled[hi] = (scaled[hi] + scaled[lo]) - 1.0
        if scaled[hi] < 1.0:
            small.append(large.pop())
    # leftovers differ from 1 only by roundoff
    for i in small + large:
        threshold[i] = 1.0
        alias[i] = i

    return DiscreteDistribution(
        probs=probs,
        alias_index=np.array(alias, dtype=np.int64),
        alias_threshold=np.array(threshold, dtype=np.float64),
        support=np.flatnonzero(probs > 0),
    )


def alias_masses(dist: DiscreteDistribution) -> np.ndarray:
    """Probability mass each outcome receives from the tables (no sampling)."""
    n = dist.n
    masses = dist.alias_threshold / n
    np.add.at(masses, dist.alias_index, (1.0 - dist.alias_threshold) / n)
    return masses


def split_uniform(u, n: int):
    """Split uniforms in [0, 1) into an alias cell in ``[0, n)`` and a fresh uniform.

    ``u * n`` has integer part uniform over the cells and, independently, a
    fractional part uniform on [0, 1), so one random number serves both the
    table lookup and the threshold comparison.
    """
    x = np.asarray(u) * n
    cell = np.minimum(x.astype(np.int64), n - 1)
    return cell, x - cell


def sample(dist: DiscreteDistribution, rng: RngStream) -> int:
    """One draw: a table lookup and a comparison."""
    cell, frac = split_uniform(rng.random(), dist.n)
    i = int(cell)
    return i if frac < dist.alias_threshold[i] else int(dist.alias_index[i])


def sample_many(dist: DiscreteDistribution, size: int, rng: RngStream) -> np.ndarray:
    cell, frac = split_uniform(rng.random(size), dist.n)
    return np.where(frac < dist.alias_threshold[cell], cell, dist.alias_index[cell])


def rademacher_vector(length: int, rng: RngStream) -> np.ndarray:
    if length < 1:
        raise ValueError("length must be >= 1")
    return rng.signs(length)
