"""Stochastic matrix product decomposition.

Any chain ``A_1 ... A_k`` is rewritten as ``diag(d0) A'_1 ... A'_k`` where
every ``|A'_l|`` is row-stochastic. The vector ``d0`` holds the row sums of
``|A_1| ... |A_k|``, which makes the (1, q) norms of that absolute product
available in linear time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .matcore import _order, check_chain

__all__ = ["StochasticDecomposition", "decompose", "product_norm_1q"]


@dataclass(frozen=True)
class StochasticDecomposition:
    d0: np.ndarray
    stochastic_factors: list[np.ndarray]
    sign_factors: list[np.ndarray]

    @property
    def k(self) -> int:
        return len(self.stochastic_factors)

    @property
    def shape(self) -> tuple[int, int]:
        return self.stochastic_factors[0].shape[0], self.stochastic_factors[-1].shape[1]

    def reconstruct(self) -> np.ndarray:
        out = self.d0[:, None] * self.stochastic_factors[0]
        for f in self.stochastic_factors[1:]:
            out = out @ f
        return out


def _row_sums(m: np.ndarray) -> np.ndarray:
    # fsum is exactly rounded, which keeps the unit row sums tight at large n
    return np.array([math.fsum(row) for row in m.tolist()], dtype=np.float64)


def decompose(chain: Sequence) -> StochasticDecomposition:
    """Backward recursion ``d_{l-1} = |A_l| d_l`` starting from ``d_k = 1``.

    Each factor is rescaled to ``A'_l = diag(d_{l-1})^-1 A_l diag(d_l)``. Only two
    scaling vectors are alive at any time. Rows whose downstream absolute
    mass is zero can never be reached by a walk, so they are set to ``e_1``.
    """
    mats = check_chain(chain)
    d = np.ones(mats[-1].shape[1])
    stochastic: list[np.ndarray] = [None] * len(mats)
    signs: list[np.ndarray] = [None] * len(mats)
    for idx in range(len(mats) - 1, -1, -1):
        a = mats[idx]
        weighted = np.abs(a) * d[None, :]
        d_prev = _row_sums(weighted)
        dead = d_prev == 0
        safe = np.where(dead, 1.0, d_prev)
        factor = (a * d[None, :]) / safe[:, None]
        if dead.any():
            factor[dead] = 0.0
            factor[dead, 0] = 1.0
        stochastic[idx] = factor
        signs[idx] = np.where(factor >= 0, 1.0, -1.0)
        d = d_prev
    return StochasticDecomposition(d0=d, stochastic_factors=stochastic, sign_factors=signs)


def product_norm_1q(dec: StochasticDecomposition, q) -> float:
    """``|| |A_1| ... |A_k| ||_{1,q}``, read off ``d0`` in linear time."""
    return float(np.linalg.norm(dec.d0, ord=_order(q)))

