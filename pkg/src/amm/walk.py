"""Random-walk (path-integral) estimator for products of k matrices.

A sample starts at a row ``j0 ~ q``, walks through the row-stochastic factors
``|A'_1|, ..., |A'_k|`` and returns ``(d0[j0] / q[j0]) * sign(path) * e_{j0} e_{jk}^T``.
Its mean is exactly ``A_1 ... A_k``. All starting rows are sampled jointly, so
a single estimator covers the whole product.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .decomp import StochasticDecomposition, decompose
from .errors import AllZeroChain, BadSpec, UnsupportedQ
from .sampler import DiscreteDistribution, RngStream, build_alias, sample, split_uniform

__all__ = [
    "QChoice",
    "PROPORTIONAL_D0",
    "PROPORTIONAL_D0_SQUARED",
    "WalkPlan",
    "WalkSample",
    "build_plan",
    "draw_walk",
    "estimate_walk",
    "estimate_walk_rowwise",
    "walk_variance_bounds",
    "walk_entry_variances",
    "absolute_product",
]

BLOCK_SIZE = 1 << 16


@dataclass(frozen=True)
class QChoice:
    """Starting-row distribution: ``"d0"``, ``"d0sq"`` or ``"custom"`` weights."""

    kind: str
    weights: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("d0", "d0sq", "custom"):
            raise BadSpec(f"unknown q choice {self.kind!r}")
        if (self.kind == "custom") != (self.weights is not None):
            raise BadSpec("custom q needs weights, and only custom q takes them")

    @classmethod
    def custom(cls, weights) -> "QChoice":
        return cls("custom", np.asarray(weights, dtype=np.float64))


PROPORTIONAL_D0 = QChoice("d0")
PROPORTIONAL_D0_SQUARED = QChoice("d0sq")


@dataclass(frozen=True)
class WalkSample:
    start: int
    end: int
    sign: float
    weight: float


@dataclass
class WalkPlan:
    """Everything needed to draw walks in O(k) per sample.

    ``row_threshold[l]`` / ``row_alias[l]`` stack the alias tables of every
    row of ``|A'_l|``. ``ratio[i] = d0[i] / q[i]`` on the support of ``q`` and
    zero elsewhere. ``q_dist`` is None when the whole chain is zero.
    """

    dec: StochasticDecomposition
    q: QChoice
    q_dist: DiscreteDistribution | None
    ratio: np.ndarray
    row_threshold: list[np.ndarray]
    row_alias: list[np.ndarray]

    @property
    def shape(self) -> tuple[int, int]:
        return self.dec.shape

    @property
    def is_zero(self) -> bool:
        return self.q_dist is None

    @property
    def scale(self) -> float:
        """``||d0||_1``, the constant sample weight when ``q`` is proportional to d0."""
        return float(self.dec.d0.sum())

    def row_dist(self, layer: int, row: int) -> DiscreteDistribution:
        probs = np.abs(self.dec.stochastic_factors[layer][row])
        return DiscreteDistribution(
            probs=probs,
            alias_index=self.row_alias[layer][row],
            alias_threshold=self.row_threshold[layer][row],
            support=np.flatnonzero(probs > 0),
        )


def _q_weights(d0: np.ndarray, q: QChoice) -> np.ndarray:
    if q.kind == "d0":
        return d0.copy()
    if q.kind == "d0sq":
        return d0 * d0
    w = np.asarray(q.weights, dtype=np.float64)
    if w.shape != d0.shape:
        raise BadSpec(f"custom q has {w.size} weights for {d0.size} rows")
    if np.any(w < 0):
        raise BadSpec("custom q weights must be nonnegative")
    if np.any((w > 0) & (d0 == 0)):
        raise BadSpec("custom q puts mass on rows whose product row is zero")
    return w


def build_plan(chain: Sequence, q: QChoice = PROPORTIONAL_D0) -> WalkPlan:
    dec = decompose(chain)
    d0 = dec.d0
    thresholds, aliases = [], []
    for factor in dec.stochastic_factors:
        thr = np.empty(factor.shape)
        ali = np.empty(factor.shape, dtype=np.int64)
        for i, row in enumerate(np.abs(factor)):
            dist = build_alias(row)
            thr[i] = dist.alias_threshold
            ali[i] = dist.alias_index
        thresholds.append(thr)
        aliases.append(ali)

    if not np.any(d0 > 0) and q.kind != "custom":
        return WalkPlan(dec, q, None, np.zeros_like(d0), thresholds, aliases)

    q_dist = build_alias(_q_weights(d0, q))
    ratio = np.zeros_like(d0)
    on = q_dist.probs > 0
    ratio[on] = d0[on] / q_dist.probs[on]
    return WalkPlan(dec, q, q_dist, ratio, thresholds, aliases)


def draw_walk(plan: WalkPlan, rng: RngStream) -> WalkSample:
    if plan.is_zero:
        raise AllZeroChain("the chain product is identically zero; there is no walk to draw")
    start = cur = sample(plan.q_dist, rng)
    sign = 1.0
    for layer, signs in enumerate(plan.dec.sign_factors):
        nxt = sample(plan.row_dist(layer, cur), rng)
        sign *= signs[cur, nxt]
        cur = nxt
    return WalkSample(start=start, end=cur, sign=sign, weight=float(plan.ratio[start]))


def _walk_from(plan: WalkPlan, starts: np.ndarray, rng: RngStream):
    """Vectorised walk from the given start rows; returns ``(ends, signs)``."""
    cur = starts
    sign = np.ones(len(starts))
    for thr, ali, signs in zip(plan.row_threshold, plan.row_alias, plan.dec.sign_factors):
        width = thr.shape[1]
        cells, frac = split_uniform(rng.random(len(cur)), width)
        flat = cur * width + cells
        nxt = np.where(frac < thr.ravel()[flat], cells, ali.ravel()[flat])
        sign *= signs.ravel()[cur * width + nxt]
        cur = nxt
    return cur, sign


def _block_sum(plan: WalkPlan, size: int, rng: RngStream) -> np.ndarray:
    n, m = plan.shape
    # the start rows of `size` i.i.d. draws from q, as a multiset, are exactly
    # multinomial; drawing the counts costs O(n) instead of O(size)
    counts = rng.gen.multinomial(size, plan.q_dist.probs)
    starts = np.repeat(np.arange(n), counts)
    ends, sign = _walk_from(plan, starts, rng)
    # the weight d0/q depends only on the start row, so scale rows afterwards
    flat = np.bincount(starts * m + ends, weights=sign, minlength=n * m)
    return flat.reshape(n, m) * plan.ratio[:, None]


def estimate_walk(plan: WalkPlan, num_samples: int, rng: RngStream, workers: int = 1,
                  block_size: int = BLOCK_SIZE) -> np.ndarray:
    """Mean of ``num_samples`` walk samples.

    Samples are cut into fixed blocks, block ``b`` drawing from
    ``rng.child(b)``. Block sums are reduced in block order, so the result
    does not depend on ``workers``.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    n, m = plan.shape
    if plan.is_zero:
        return np.zeros((n, m))
    sizes = [block_size] * (num_samples // block_size)
    if num_samples % block_size:
        sizes.append(num_samples % block_size)

    def run(b):
        return _block_sum(plan, sizes[b], rng.child(b))

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partial = list(pool.map(run, range(len(sizes))))
    else:
        partial = [run(b) for b in range(len(sizes))]
    acc = np.zeros((n, m))
    for p in partial:
        acc += p
    return acc / num_samples


def estimate_walk_rowwise(plan: WalkPlan, num_samples: int, rng: RngStream) -> np.ndarray:
    """Row-by-row baseline: each nonzero row gets its own batch of walks.

    Row ``i`` receives ``ceil(L * d0_i^2 / ||d0||_2^2)`` walks and is estimated
    as ``d0_i`` times the mean signed end-point indicator.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    n, m = plan.shape
    d0 = plan.dec.d0
    if not np.any(d0 > 0):
        return np.zeros((n, m))
    rows = np.flatnonzero(d0 > 0)
    share = d0[rows] ** 2 / np.sum(d0[rows] ** 2)
    counts = np.maximum(1, np.ceil(num_samples * share - 1e-9)).astype(np.int64)
    starts = np.repeat(rows, counts)
    ends, sign = _walk_from(plan, starts, rng)
    per_sample = np.repeat(d0[rows] / counts, counts)
    flat = np.bincount(starts * m + ends, weights=sign * per_sample, minlength=n * m)
    return flat.reshape(n, m)


def absolute_product(dec: StochasticDecomposition) -> np.ndarray:
    """``|A_1| ... |A_k|`` rebuilt from the decomposition."""
    out = dec.d0[:, None] * np.abs(dec.stochastic_factors[0])
    for f in dec.stochastic_factors[1:]:
        out = out @ np.abs(f)
    return out


def walk_entry_variances(plan: WalkPlan) -> np.ndarray:
    """Exact per-entry variance ``(d0_i/q_i) |P|_ij - P_ij^2`` of one sample."""
    if plan.is_zero:
        return np.zeros(plan.shape)
    second = plan.ratio[:, None] * absolute_product(plan.dec)
    return np.maximum(second - plan.dec.reconstruct() ** 2, 0.0)


def walk_variance_bounds(dec: StochasticDecomposition, q: QChoice) -> tuple[float, float]:
    """``(max_var_bound, trace_bound)`` for one walk sample.

    For q proportional to d0 these are ``||P||_max * ||P||_{1,1}`` and
    ``||P||_{1,1}^2`` with ``P`` the absolute product. For q proportional to
    d0^2 the max bound is ``||P||_{1,2}^2``; summing the per-entry bound
    ``||d0||_2^2 / d0_i * P_ij`` gives ``|supp d0| * ||d0||_2^2`` for the trace.
    """
    d0 = dec.d0
    if q.kind == "d0":
        l11 = float(d0.sum())
        pmax = float(absolute_product(dec).max())
        return pmax * l11, l11 * l11
    if q.kind == "d0sq":
        l12sq = float(np.dot(d0, d0))
        return l12sq, int(np.count_nonzero(d0)) * l12sq
    raise UnsupportedQ("closed-form bounds exist only for the d0 and d0^2 choices")

