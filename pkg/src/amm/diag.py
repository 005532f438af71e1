"""Sample planning, exhaustive covariance oracles and the complexity table.

The oracles enumerate the full outcome space of one estimator sample (every
walk path, every sign vector, every sampled column) and compute exact
moments. They refuse inputs that are too large instead of falling back to
Monte Carlo.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import BadSpec, DimensionMismatch, InvalidAccuracy, TooLargeToEnumerate
from .matcore import INF, abs_matrix, as_matrix, check_chain, elementwise_norm
from .sketch import (
    COLUMN_SAMPLE,
    FROBENIUS_OPTIMAL,
    MAX_NORM_OPTIMAL,
    TUG_OF_WAR,
    SamplingWeights,
    multi_trace_bound,
    sampling_probabilities,
    sketch_maxvar_formula,
    sketch_trace_formula,
)
from .walk import PROPORTIONAL_D0, QChoice, build_plan, walk_entry_variances, walk_variance_bounds

__all__ = [
    "NormKind",
    "Accuracy",
    "CovarianceReport",
    "ComplexityRow",
    "plan_samples",
    "exhaustive_walk_covariance",
    "exhaustive_sketch_covariance",
    "exhaustive_multi_covariance",
    "tug_of_war_pair_covariance",
    "column_sample_pair_covariance",
    "complexity_table",
    "norm_order_checks",
    "holder_chain",
    "walk_quantity",
    "sketch_quantity",
]

MAX_PATHS = 100_000
MAX_SIGN_DIM = 20
MAX_OUTCOMES = 100_000


class NormKind(str, enum.Enum):
    MAX = "max"
    FROBENIUS = "frob"


@dataclass(frozen=True)
class Accuracy:
    epsilon: float
    delta: float
    norm: NormKind = NormKind.FROBENIUS
    safety_factor: float = 2.0

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise InvalidAccuracy(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise InvalidAccuracy(f"delta must lie in (0, 1), got {self.delta}")
        if not self.safety_factor >= 1:
            raise InvalidAccuracy("safety_factor must be >= 1")
        object.__setattr__(self, "norm", NormKind(self.norm))


def plan_samples(variance_quantity: float, acc: Accuracy, dim_for_union: int = 1) -> int:
    """Bernstein sample count ``ceil(safety * V * log_term / eps^2)``.

    ``V`` is the largest per-entry variance for the max norm (with
    ``log_term = ln(d / delta)``, ``d = dim_for_union``) and the covariance
    trace for the Frobenius norm (with ``log_term = max(ln(1 / delta), 1)``).
    """
    if variance_quantity < 0:
        raise InvalidAccuracy("variance quantity must be nonnegative")
    if acc.norm is NormKind.MAX:
        log_term = math.log(max(dim_for_union, 1) / acc.delta)
    else:
        log_term = max(math.log(1.0 / acc.delta), 1.0)
    raw = acc.safety_factor * variance_quantity * log_term / acc.epsilon ** 2
    return max(1, math.ceil(raw))


@dataclass
class CovarianceReport:
    trace_closed_form: float
    max_diag_closed_form: float
    bound: float
    trace_exhaustive: float | None = None
    max_diag_exhaustive: float | None = None
    mean_exhaustive: np.ndarray | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("mean_exhaustive")
        return d


# ---------------------------------------------------------------- walk oracle

def exhaustive_walk_covariance(chain: Sequence, q: QChoice = PROPORTIONAL_D0) -> CovarianceReport:
    """Enumerate every walk path and return exact per-sample moments.

    ``bound`` is the trace bound ``|| |A_1| ... |A_k| ||_{1,1}^2`` for
    q proportional to d0 (and the matching bound for ``d0sq``).
    """
    mats = check_chain(chain)
    dims = [mats[0].shape[0]] + [m.shape[1] for m in mats]
    if math.prod(dims) > MAX_PATHS:
        raise TooLargeToEnumerate(f"{math.prod(dims)} paths exceed the limit of {MAX_PATHS}")
    plan = build_plan(mats, q)
    n, m = dims[0], dims[-1]
    if plan.is_zero:
        zero = np.zeros((n, m))
        return CovarianceReport(0.0, 0.0, 0.0, 0.0, 0.0, zero)

    # paths as an index grid over (j0, ..., jk)
    grids = np.meshgrid(*[np.arange(d) for d in dims], indexing="ij")
    idx = [g.ravel() for g in grids]
    prob = plan.q_dist.probs[idx[0]].copy()
    sign = np.ones_like(prob)
    for layer, factor in enumerate(plan.dec.stochastic_factors):
        entry = factor[idx[layer], idx[layer + 1]]
        prob *= np.abs(entry)
        sign *= plan.dec.sign_factors[layer][idx[layer], idx[layer + 1]]
    value = sign * plan.ratio[idx[0]]
    cell = idx[0] * m + idx[-1]
    mean = np.bincount(cell, weights=prob * value, minlength=n * m).reshape(n, m)
    second = np.bincount(cell, weights=prob * value * value, minlength=n * m).reshape(n, m)
    var = np.maximum(second - mean * mean, 0.0)

    closed = walk_entry_variances(plan)
    if q.kind == "custom":
        bound = float(np.sum(closed))
    else:
        bound = walk_variance_bounds(plan.dec, q)[1]
    return CovarianceReport(
        trace_closed_form=float(closed.sum()),
        max_diag_closed_form=float(closed.max()),
        bound=bound,
        trace_exhaustive=float(var.sum()),
        max_diag_exhaustive=float(var.max()),
        mean_exhaustive=mean,
    )


# -------------------------------------------------------------- sketch oracles

def _sign_vectors(dim: int) -> np.ndarray:
    return np.array(list(itertools.product((1.0, -1.0), repeat=dim)))


def _moments(samples: np.ndarray, probs: np.ndarray):
    """Weighted mean and per-entry variance over the leading axis."""
    mean = np.tensordot(probs, samples, axes=1)
    second = np.tensordot(probs, samples * samples, axes=1)
    return mean, np.maximum(second - mean * mean, 0.0)


def _two_matrix_outcomes(a, b, kind, weights):
    """All single-sample outcomes ``A s s^T B`` with their probabilities."""
    inner = a.shape[1]
    if kind == TUG_OF_WAR:
        if inner > MAX_SIGN_DIM:
            raise TooLargeToEnumerate(f"2^{inner} sign vectors exceed the limit of 2^{MAX_SIGN_DIM}")
        s = _sign_vectors(inner)
        probs = np.full(len(s), 1.0 / len(s))
    else:
        if inner > MAX_OUTCOMES:
            raise TooLargeToEnumerate(f"{inner} outcomes exceed the limit of {MAX_OUTCOMES}")
        p = sampling_probabilities(a, b, weights)
        on = np.flatnonzero(p > 0)
        if on.size == 0:
            return np.zeros((1, a.shape[0], b.shape[1])), np.ones(1)
        s = np.zeros((on.size, inner))
        s[np.arange(on.size), on] = 1.0 / np.sqrt(p[on])
        probs = p[on]
    samples = np.einsum("ik,sk,sl,lj->sij", a, s, s, b, optimize=True)
    return samples, probs


def exhaustive_sketch_covariance(a, b, kind: str = TUG_OF_WAR,
                                 weights: SamplingWeights | None = None) -> CovarianceReport:
    a = as_matrix(a, name="A")
    b = as_matrix(b, name="B")
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    if kind == COLUMN_SAMPLE and weights is None:
        weights = FROBENIUS_OPTIMAL
    samples, probs = _two_matrix_outcomes(a, b, kind, weights)
    mean, var = _moments(samples, probs)
    frob = elementwise_norm(a, 2, 2) ** 2 * elementwise_norm(b, 2, 2) ** 2
    if kind == TUG_OF_WAR:
        bound = 2.0 * frob
    elif weights.kind == "frob":
        bound = frob
    else:
        # no closed-form bound for other weights; report the exact trace
        bound = sketch_trace_formula(a, b, kind, weights)
    return CovarianceReport(
        trace_closed_form=sketch_trace_formula(a, b, kind, weights),
        max_diag_closed_form=sketch_maxvar_formula(a, b, kind, weights),
        bound=bound,
        trace_exhaustive=float(var.sum()),
        max_diag_exhaustive=float(var.max()),
        mean_exhaustive=mean,
    )


def exhaustive_multi_covariance(chain: Sequence) -> CovarianceReport:
    """Exact moments of one rank-one tug-of-war sample of a k-chain.

    Enumerates the joint sign space of ``s_1, ..., s_{k-1}``.
    """
    mats = check_chain(chain)
    if len(mats) < 2:
        raise BadSpec("need at least two matrices")
    inner = [m.shape[1] for m in mats[:-1]]
    if sum(inner) > MAX_SIGN_DIM:
        raise TooLargeToEnumerate(f"2^{sum(inner)} joint sign patterns exceed 2^{MAX_SIGN_DIM}")
    per_layer = [_sign_vectors(d) for d in inner]
    samples = []
    for combo in itertools.product(*per_layer):
        out = mats[0]
        for s, m in zip(combo, mats[1:]):
            out = (out @ s)[:, None] * (s @ m)[None, :]
        samples.append(out)
    samples = np.stack(samples)
    probs = np.full(len(samples), 1.0 / len(samples))
    mean, var = _moments(samples, probs)
    bound = multi_trace_bound(mats)
    return CovarianceReport(
        trace_closed_form=float("nan"),
        max_diag_closed_form=float("nan"),
        bound=bound,
        trace_exhaustive=float(var.sum()),
        max_diag_exhaustive=float(var.max()),
        mean_exhaustive=mean,
    )


def tug_of_war_pair_covariance(dim: int) -> np.ndarray:
    """Exact ``Cov[s_i s_j, s_k s_l]`` over all sign vectors, shape ``(d, d, d, d)``."""
    if dim > MAX_SIGN_DIM:
        raise TooLargeToEnumerate(f"2^{dim} sign vectors exceed 2^{MAX_SIGN_DIM}")
    s = _sign_vectors(dim)
    outer = np.einsum("si,sj->sij", s, s)
    mean = outer.mean(axis=0)
    centred = outer - mean
    return np.einsum("sij,skl->ijkl", centred, centred) / len(s)


def column_sample_pair_covariance(p) -> np.ndarray:
    """Exact ``Cov[s_i s_j, s_k s_l]`` for ``s = e_j / sqrt(p_j)``."""
    p = np.asarray(p, dtype=np.float64)
    on = np.flatnonzero(p > 0)
    d = len(p)
    s = np.zeros((on.size, d))
    s[np.arange(on.size), on] = 1.0 / np.sqrt(p[on])
    outer = np.einsum("si,sj->sij", s, s)
    w = p[on]
    mean = np.tensordot(w, outer, axes=1)
    centred = outer - mean
    return np.einsum("s,sij,skl->ijkl", w, centred, centred)


# ------------------------------------------------------------ norm comparisons

def holder_chain(x) -> dict[str, float]:
    """Quantities of the element-wise norm partial order for a square ``x``."""
    x = as_matrix(x)
    n = x.shape[0]
    if x.shape[0] != x.shape[1]:
        raise DimensionMismatch("the norm partial order is stated for square matrices")
    xt = x.T
    rn = math.sqrt(n)
    return {
        "l11/sqrt(n)": elementwise_norm(x, 1, 1) / rn,
        "l12": elementwise_norm(x, 1, 2),
        "l12T": elementwise_norm(xt, 1, 2),
        "l21T": elementwise_norm(xt, 2, 1),
        "l21": elementwise_norm(x, 2, 1),
        "sqrt(n)*l22": rn * elementwise_norm(x, 2, 2),
        "n*l2inf": n * elementwise_norm(x, 2, INF),
        "n*l2infT": n * elementwise_norm(xt, 2, INF),
        "n*linf2T": n * elementwise_norm(xt, INF, 2),
        "n*linf2": n * elementwise_norm(x, INF, 2),
    }


_MIDDLE = ("l12", "l12T", "l21T", "l21")
_TOP = ("n*l2inf", "n*l2infT", "n*linf2T", "n*linf2")


def norm_order_checks(a, b, slack: float = 1e-12) -> dict[str, bool]:
    """Check every arrow of the norm partial order on A, B and |A||B|."""
    checks: dict[str, bool] = {}
    for label, x in (("A", a), ("B", b)):
        h = holder_chain(x)
        tol = slack * max(1.0, max(h.values()))
        for mid in _MIDDLE:
            checks[f"{label}: l11/sqrt(n) <= {mid}"] = h["l11/sqrt(n)"] <= h[mid] + tol
            checks[f"{label}: {mid} <= sqrt(n)*l22"] = h[mid] <= h["sqrt(n)*l22"] + tol
        for top in _TOP:
            checks[f"{label}: sqrt(n)*l22 <= {top}"] = h["sqrt(n)*l22"] <= h[top] + tol
    lhs = elementwise_norm(abs_matrix(a) @ abs_matrix(b), 1, 1)
    rhs = elementwise_norm(a, 2, 1) * elementwise_norm(np.asarray(b).T, 2, 1)
    checks["|A||B| l11 <= l21(A) l21(B^T)"] = lhs <= rhs + slack * max(1.0, rhs)
    return checks


# ------------------------------------------------------------ complexity table

@dataclass
class ComplexityRow:
    algorithm: str
    norm: str
    quantity: float
    predicted_samples: float
    predicted_time: float
    data_model: str
    theory_only: bool = False
    multiple_matrices: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def complexity_table(a, b, acc: Accuracy) -> list[ComplexityRow]:
    """Evaluate every runtime expression of the comparison tables on ``(A, B)``.

    ``quantity`` is the norm expression; classical rows predict
    ``quantity / eps^2`` samples, quantum rows ``quantity / eps`` queries and
    are marked ``theory_only``. ``predicted_time`` multiplies by the
    per-sample cost at ``omega = 3`` (``n* n*'`` for circuit-model sketches,
    ``nm`` for the RAM column sampler, 1 for walks).
    """
    a = as_matrix(a, name="A")
    b = as_matrix(b, name="B")
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    n, inner = a.shape
    m = b.shape[1]
    nn = max(n * m, n * inner, inner * m)
    abar_bbar = abs_matrix(a) @ abs_matrix(b)
    eps, eps2 = acc.epsilon, acc.epsilon ** 2
    rt = math.sqrt(n * m)
    bt = b.T
    f_a, f_b = elementwise_norm(a, 2, 2), elementwise_norm(b, 2, 2)

    l12sq = elementwise_norm(abar_bbar, 1, 2) ** 2
    l11 = elementwise_norm(abar_bbar, 1, 1)
    lmax = elementwise_norm(abar_bbar, INF, INF)
    sarlos_max = elementwise_norm(a, 2, INF) ** 2 * elementwise_norm(bt, 2, INF) ** 2
    dkm_max = elementwise_norm(a.T, INF, 2) ** 2 * elementwise_norm(b, INF, 2) ** 2
    frob = f_a ** 2 * f_b ** 2

    def classical(name, norm, quantity, per_sample, model, multi):
        return ComplexityRow(name, norm, quantity, quantity / eps2, per_sample * quantity / eps2,
                             model, False, multi)

    def quantum(name, norm, quantity, per_sample, model, multi):
        return ComplexityRow(name, norm, quantity, quantity / eps, per_sample * quantity / eps,
                             model, True, multi)

    rows = [
        classical("cohen-lewis", "max", l12sq, 1, "RAM", True),
        classical("cohen-lewis", "frob", rt * l12sq, 1, "RAM", True),
        classical("sarlos-tug-of-war", "max", sarlos_max, nn, "circuit", True),
        classical("sarlos-tug-of-war", "frob", frob, nn, "circuit", True),
        classical("dkm-column-sample", "max", dkm_max, nn, "circuit", False),
        classical("dkm-column-sample", "frob", frob, nn, "circuit", False),
        classical("dkm-column-sample-ram", "max", dkm_max, n * m, "RAM", False),
        classical("dkm-column-sample-ram", "frob", frob, n * m, "RAM", False),
        classical("random-walk", "max", lmax * l11, 1, "RAM", True),
        classical("random-walk", "frob", l11 ** 2, 1, "RAM", True),
        quantum("shao", "max", elementwise_norm(a, 2, 1) * elementwise_norm(bt, 2, 1), 1, "QROM", False),
        quantum("shao", "frob", rt * elementwise_norm(a.T, 2, 1) * elementwise_norm(b, 2, 1), 1,
                "QROM", False),
        quantum("quantum-tug-of-war", "max", f_a * f_b, nn, "quantum circuit", True),
        quantum("quantum-column-sample", "max", f_a * f_b, n * m, "QROM", False),
        quantum("quantum-random-walk", "max", l11, 1, "QRAM", True),
        quantum("quantum-random-walk", "frob", rt * l11, 1, "QRAM", True),
    ]
    if n == inner == m:
        failed = [k for k, ok in norm_order_checks(a, b).items() if not ok]
        if failed:
            raise ArithmeticError(f"norm partial order violated: {failed}")
    return rows


def walk_quantity(chain: Sequence, norm: NormKind, q: QChoice = PROPORTIONAL_D0) -> float:
    """Variance quantity the planner uses for the random-walk estimator."""
    plan = build_plan(chain, q)
    if plan.is_zero:
        return 0.0
    max_bound, trace_bound = walk_variance_bounds(plan.dec, q)
    return max_bound if NormKind(norm) is NormKind.MAX else trace_bound


def sketch_quantity(a, b, kind: str, norm: NormKind, weights: SamplingWeights | None = None) -> float:
    """Variance quantity the planner uses for a two-matrix sketch.

    Frobenius: ``||A||_F^2 ||B||_F^2`` (half the tug-of-war trace bound).
    Max norm: the per-sample max-variance quantity of the sketch.
    """
    if NormKind(norm) is NormKind.FROBENIUS:
        return elementwise_norm(a, 2, 2) ** 2 * elementwise_norm(b, 2, 2) ** 2
    if kind == COLUMN_SAMPLE and weights is None:
        weights = MAX_NORM_OPTIMAL
    return sketch_maxvar_formula(a, b, kind, weights)

