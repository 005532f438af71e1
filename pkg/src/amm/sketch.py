"""Sketching estimators: tug-of-war (AMS) and column-sample sketches.

Two-matrix products are approximated by ``(A S^T)(S B)`` with ``E[S^T S] = I``.
Longer chains insert an independent tug-of-war sketch between every pair of
neighbouring factors, either one rank-one sample at a time or as whole
``S_l^T S_l`` blocks that go through the exact multiplication backend.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadSpec, DimensionMismatch, UnsupportedSketch, ZeroSupport
from .matcore import NAIVE, MultiplyBackend, as_matrix, check_chain, multiply_exact
from .sampler import DiscreteDistribution, RngStream, build_alias, sample_many

__all__ = [
    "TUG_OF_WAR",
    "COLUMN_SAMPLE",
    "SamplingWeights",
    "FROBENIUS_OPTIMAL",
    "MAX_NORM_OPTIMAL",
    "UNIFORM",
    "SketchMatrix",
    "sampling_probabilities",
    "tug_of_war_sketch",
    "column_sample_sketch",
    "estimate_two_matrix",
    "estimate_multi_matrix",
    "median_of_means",
    "mom_repetitions",
    "sketch_trace_formula",
    "sketch_maxvar_formula",
    "multi_trace_bound",
]

TUG_OF_WAR = "tug_of_war"
COLUMN_SAMPLE = "column_sample"


@dataclass(frozen=True)
class SamplingWeights:
    """How the column-sample sketch picks inner indices.

    ``"frob"`` uses ``p_k ~ ||A[:, k]|| ||B[k, :]||``, ``"max"`` uses
    ``p_k ~ max_i |A_ik| * max_j |B_kj|``, ``"uniform"`` is flat and
    ``"custom"`` takes explicit weights.
    """

    kind: str
    weights: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("frob", "max", "uniform", "custom"):
            raise BadSpec(f"unknown sampling weights {self.kind!r}")
        if (self.kind == "custom") != (self.weights is not None):
            raise BadSpec("custom sampling needs weights, and only custom takes them")

    @classmethod
    def custom(cls, weights) -> "SamplingWeights":
        return cls("custom", np.asarray(weights, dtype=np.float64))


FROBENIUS_OPTIMAL = SamplingWeights("frob")
MAX_NORM_OPTIMAL = SamplingWeights("max")
UNIFORM = SamplingWeights("uniform")


def _check_pair(a, b):
    a = as_matrix(a, name="A")
    b = as_matrix(b, name="B")
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return a, b


def sampling_probabilities(a, b, w: SamplingWeights = FROBENIUS_OPTIMAL) -> np.ndarray:
    """Normalised ``p`` over the inner index; zero on pairs with no mass.

    Returns an all-zero vector when every column/row pair is zero (then
    ``AB = 0`` and nothing needs sampling).
    """
    a, b = _check_pair(a, b)
    live = (np.any(a != 0, axis=0)) & (np.any(b != 0, axis=1))
    if w.kind == "frob":
        raw = np.linalg.norm(a, axis=0) * np.linalg.norm(b, axis=1)
    elif w.kind == "max":
        raw = np.abs(a).max(axis=0) * np.abs(b).max(axis=1)
    elif w.kind == "uniform":
        raw = np.ones(a.shape[1])
    else:
        raw = np.asarray(w.weights, dtype=np.float64)
        if raw.shape != (a.shape[1],):
            raise BadSpec(f"custom weights need {a.shape[1]} entries, got {raw.size}")
        if np.any(raw < 0) or not np.all(np.isfinite(raw)):
            raise BadSpec("custom weights must be finite and nonnegative")
        if not np.any(raw > 0):
            if live.any():
                raise ZeroSupport("custom weights are all zero but AB is not")
            return np.zeros(a.shape[1])
        if np.any(live & (raw == 0)):
            raise BadSpec("custom weights vanish on a nonzero column/row pair")
    raw = np.where(live, raw, 0.0)
    total = raw.sum()
    return raw / total if total > 0 else raw


@dataclass(frozen=True)
class SketchMatrix:
    """A ``c x inner_dim`` sketch.

    Tug-of-war sketches keep the dense ``±1/sqrt(c)`` matrix in ``dense``.
    Column-sample sketches are 1-sparse per row: row ``r`` has the value
    ``values[r]`` in column ``indices[r]``; ``probs`` is the distribution the
    indices were drawn from.
    """

    kind: str
    c: int
    inner_dim: int
    dense: np.ndarray | None = None
    indices: np.ndarray | None = None
    values: np.ndarray | None = None
    probs: np.ndarray | None = None

    def to_dense(self) -> np.ndarray:
        if self.kind == TUG_OF_WAR:
            return self.dense
        s = np.zeros((self.c, self.inner_dim))
        s[np.arange(self.c), self.indices] = self.values
        return s


def tug_of_war_sketch(inner_dim: int, c: int, rng: RngStream) -> SketchMatrix:
    if c < 1 or inner_dim < 1:
        raise BadSpec("sketch size and inner dimension must be >= 1")
    dense = rng.signs((c, inner_dim)) / math.sqrt(c)
    return SketchMatrix(TUG_OF_WAR, c, inner_dim, dense=dense)


def column_sample_sketch(a, b, c: int, w: SamplingWeights, rng: RngStream,
                         dist: DiscreteDistribution | None = None) -> SketchMatrix:
    """Draw ``c`` inner indices with ``p`` and scale each by ``1/sqrt(c p_j)``.

    ``dist`` may carry a prebuilt alias table for ``p`` (built once, reused
    across repetitions).
    """
    if c < 1:
        raise BadSpec("sketch size must be >= 1")
    a, b = _check_pair(a, b)
    if dist is None:
        p = sampling_probabilities(a, b, w)
        if not np.any(p > 0):
            return SketchMatrix(COLUMN_SAMPLE, c, a.shape[1], indices=np.zeros(c, dtype=np.int64),
                                values=np.zeros(c), probs=p)
        dist = build_alias(p)
    p = dist.probs
    idx = sample_many(dist, c, rng)
    values = 1.0 / np.sqrt(c * p[idx])
    return SketchMatrix(COLUMN_SAMPLE, c, a.shape[1], indices=idx, values=values, probs=p)


def estimate_two_matrix(a, b, sketch: SketchMatrix, backend: MultiplyBackend = NAIVE) -> np.ndarray:
    """``(A S^T)(S B)``; the column-sample sides are row/column gathers."""
    a, b = _check_pair(a, b)
    if sketch.inner_dim != a.shape[1]:
        raise DimensionMismatch(f"sketch width {sketch.inner_dim} != inner dimension {a.shape[1]}")
    if sketch.kind == TUG_OF_WAR:
        left = multiply_exact(a, sketch.dense.T, backend)
        right = multiply_exact(sketch.dense, b, backend)
    else:
        left = a[:, sketch.indices] * sketch.values[None, :]
        right = sketch.values[:, None] * b[sketch.indices, :]
    return multiply_exact(left, right, backend)


def estimate_multi_matrix(chain: Sequence, c: int, rng: RngStream, mode: str = "fastmm",
                          backend: MultiplyBackend = NAIVE, kind: str = TUG_OF_WAR) -> np.ndarray:
    """Unbiased tug-of-war estimate of ``A_1 ... A_k``.

    ``mode="outer"`` averages ``c`` products ``A_1 s_1 s_1^T A_2 ... s_{k-1}^T A_k``,
    each evaluated as matrix-vector products. ``mode="fastmm"`` evaluates
    ``A_1 S_1^T S_1 A_2 ... S_{k-1}^T S_{k-1} A_k`` with independent ``c``-row
    sketches through ``backend``.
    """
    mats = check_chain(chain)
    k = len(mats)
    if k < 2:
        raise BadSpec("multi-matrix sketching needs at least two matrices")
    if kind != TUG_OF_WAR:
        raise UnsupportedSketch("only tug-of-war sketches extend past two matrices")
    if c < 1:
        raise BadSpec("sketch size must be >= 1")

    if mode == "outer":
        signs = [rng.signs((c, m.shape[1])) for m in mats[:-1]]
        left = mats[0] @ signs[0].T                      # n0 x c
        right = signs[-1] @ mats[-1]                     # c x nk
        coef = np.ones(c)
        for l in range(1, k - 1):
            coef *= np.einsum("ci,ij,cj->c", signs[l - 1], mats[l], signs[l])
        return multiply_exact(left * coef[None, :], right, backend) / c

    if mode == "fastmm":
        out = mats[0]
        for m in mats[1:]:
            s = tug_of_war_sketch(out.shape[1], c, rng).dense
            out = multiply_exact(multiply_exact(out, s.T, backend),
                                 multiply_exact(s, m, backend), backend)
        return out

    raise BadSpec(f"unknown mode {mode!r}; expected 'outer' or 'fastmm'")


def mom_repetitions(delta: float) -> int:
    """Repetitions for a coordinatewise median to fail with probability <= delta.

    Each repetition succeeds with probability >= 3/4; Hoeffding then gives
    ``exp(-r/8) <= delta``.
    """
    return max(1, math.ceil(8.0 * math.log(1.0 / delta)))


def median_of_means(estimates: Sequence[np.ndarray]) -> np.ndarray:
    return np.median(np.stack(estimates), axis=0)


def _sketch_args(kind, weights):
    if kind not in (TUG_OF_WAR, COLUMN_SAMPLE):
        raise BadSpec(f"unknown sketch kind {kind!r}")
    if kind == COLUMN_SAMPLE and weights is None:
        weights = FROBENIUS_OPTIMAL
    return weights


def sketch_trace_formula(a, b, kind: str = TUG_OF_WAR, weights: SamplingWeights | None = None) -> float:
    """Closed-form ``Tr[Sigma]`` of a single sketch sample (``c = 1``)."""
    a, b = _check_pair(a, b)
    weights = _sketch_args(kind, weights)
    col2 = np.sum(a * a, axis=0)
    row2 = np.sum(b * b, axis=1)
    ab2 = float(np.sum((a @ b) ** 2))
    if kind == TUG_OF_WAR:
        value = col2.sum() * row2.sum() + ab2 - 2.0 * float(np.dot(col2, row2))
    else:
        p = sampling_probabilities(a, b, weights)
        on = p > 0
        value = float(np.sum(col2[on] * row2[on] / p[on])) - ab2
    return max(value, 0.0)


def sketch_maxvar_formula(a, b, kind: str = TUG_OF_WAR, weights: SamplingWeights | None = None) -> float:
    """Per-sample max-variance quantity.

    Tug-of-war: ``||A||_{2,inf}^2 ||B^T||_{2,inf}^2 + ||AB||_max^2 - 2 min_ij sum_k A_ik^2 B_kj^2``.
    Column-sample: the upper bound ``sum_k max_ij A_ik^2 B_kj^2 / p_k - min_ij (AB)_ij^2``.
    """
    a, b = _check_pair(a, b)
    weights = _sketch_args(kind, weights)
    ab = a @ b
    if kind == TUG_OF_WAR:
        row_a = float(np.max(np.sum(a * a, axis=1)))
        col_b = float(np.max(np.sum(b * b, axis=0)))
        cross = (a * a) @ (b * b)
        value = row_a * col_b + float(np.max(ab * ab)) - 2.0 * float(cross.min())
    else:
        p = sampling_probabilities(a, b, weights)
        on = p > 0
        peak = (np.abs(a).max(axis=0) * np.abs(b).max(axis=1)) ** 2
        value = float(np.sum(peak[on] / p[on])) - float(np.min(ab * ab))
    return max(value, 0.0)


def multi_trace_bound(chain: Sequence) -> float:
    """``3^k * prod ||A_l||_F^2``, the per-sample trace bound for k factors."""
    mats = check_chain(chain)
    out = 3.0 ** len(mats)
    for m in mats:
        out *= float(np.sum(m * m))
    return out
