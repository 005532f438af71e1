"""Dense matrices, element-wise (p, q) norms and exact multiplication backends.

Matrices are plain 2-D ``float64`` numpy arrays. A chain is any sequence of
conformable matrices. Exact products are the ground truth every estimator in
the package is measured against.
"""
from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BadSpec, DimensionMismatch

__all__ = [
    "INF",
    "Inf",
    "MultiplyBackend",
    "NAIVE",
    "STRASSEN",
    "as_matrix",
    "check_chain",
    "multiply_exact",
    "multiply_chain_exact",
    "elementwise_norm",
    "abs_matrix",
    "error_norms",
    "read_matrix",
    "write_matrix",
]


class Inf(enum.Enum):
    """The ``p = infinity`` exponent of an element-wise norm."""

    INF = "inf"

    def __repr__(self):
        return "INF"


INF = Inf.INF

_MAGIC = b"AMM1"


def as_matrix(x, *, name: str = "matrix") -> np.ndarray:
    """Return ``x`` as a finite, 2-D, C-contiguous float64 array."""
    m = np.ascontiguousarray(x, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise BadSpec(f"{name} has non-finite entries")
    return m


def check_chain(chain: Sequence) -> list[np.ndarray]:
    """Validate a matrix chain and return it as a list of float64 arrays."""
    mats = [as_matrix(a, name=f"A[{i}]") for i, a in enumerate(chain)]
    if not mats:
        raise DimensionMismatch("a chain needs at least one matrix")
    for i in range(len(mats) - 1):
        if mats[i].shape[1] != mats[i + 1].shape[0]:
            raise DimensionMismatch(
                f"A[{i}] has {mats[i].shape[1]} columns but A[{i + 1}] has "
                f"{mats[i + 1].shape[0]} rows"
            )
    return mats


@dataclass(frozen=True)
class MultiplyBackend:
    """Exact multiplication algorithm.

    ``kind="naive"`` is the cubic algorithm, ``kind="strassen"`` recurses with
    Strassen's seven products until the smallest dimension drops to
    ``strassen_cutoff`` and then falls back to the naive kernel.
    """

    kind: str = "naive"
    strassen_cutoff: int = 64

    def __post_init__(self):
        if self.kind not in ("naive", "strassen"):
            raise BadSpec(f"unknown backend {self.kind!r}")
        if self.strassen_cutoff < 2:
            raise BadSpec("strassen_cutoff must be >= 2")

    @property
    def omega(self) -> float:
        return 3.0 if self.kind == "naive" else math.log2(7)


NAIVE = MultiplyBackend("naive")
STRASSEN = MultiplyBackend("strassen")


def _naive(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # einsum without path optimisation runs its own fixed-order loops (no
    # threaded BLAS), so the per-cell accumulation order never changes.
    return np.einsum("ik,kj->ij", a, b, optimize=False)


def _strassen(a: np.ndarray, b: np.ndarray, cutoff: int) -> np.ndarray:
    n, k = a.shape
    m = b.shape[1]
    if min(n, k, m) <= cutoff:
        return _naive(a, b)
    pn, pk, pm = n % 2, k % 2, m % 2
    if pn or pk or pm:
        a = np.pad(a, ((0, pn), (0, pk)))
        b = np.pad(b, ((0, pk), (0, pm)))
    hn, hk, hm = (n + pn) // 2, (k + pk) // 2, (m + pm) // 2
    a11, a12, a21, a22 = a[:hn, :hk], a[:hn, hk:], a[hn:, :hk], a[hn:, hk:]
    b11, b12, b21, b22 = b[:hk, :hm], b[:hk, hm:], b[hk:, :hm], b[hk:, hm:]

    m1 = _strassen(a11 + a22, b11 + b22, cutoff)
    m2 = _strassen(a21 + a22, b11, cutoff)
    m3 = _strassen(a11, b12 - b22, cutoff)
    m4 = _strassen(a22, b21 - b11, cutoff)
    m5 = _strassen(a11 + a12, b22, cutoff)
    m6 = _strassen(a21 - a11, b11 + b12, cutoff)
    m7 = _strassen(a12 - a22, b21 + b22, cutoff)

    c = np.empty((2 * hn, 2 * hm))
    c[:hn, :hm] = m1 + m4 - m5 + m7
    c[:hn, hm:] = m3 + m5
    c[hn:, :hm] = m2 + m4
    c[hn:, hm:] = m1 - m2 + m3 + m6
    return c[:n, :m]


def multiply_exact(a, b, backend: MultiplyBackend = NAIVE) -> np.ndarray:
    """Exact product ``a @ b`` computed with the chosen backend."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    if backend.kind == "strassen":
        return np.ascontiguousarray(_strassen(a, b, backend.strassen_cutoff))
    return _naive(a, b)


def multiply_chain_exact(chain: Sequence, backend: MultiplyBackend = NAIVE) -> np.ndarray:
    """Left-to-right fold of :func:`multiply_exact` over a chain."""
    mats = check_chain(chain)
    out = mats[0]
    for m in mats[1:]:
        out = multiply_exact(out, m, backend)
    return out.copy() if len(mats) == 1 else out


def _order(p):
    if p is INF or (isinstance(p, float) and math.isinf(p) and p > 0):
        return np.inf
    p = float(p)
    if not p >= 1:
        raise BadSpec(f"norm exponent must be >= 1, got {p}")
    return p


def elementwise_norm(m, p, q) -> float:
    """``||m||_{p,q}``: the l_p norm of every row, then the l_q norm of those.

    ``p`` and ``q`` are reals >= 1 or :data:`INF`.
    """
    m = np.asarray(m, dtype=np.float64)
    p, q = _order(p), _order(q)
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    if scale == 0.0:
        return 0.0
    # rescale so powers of tiny entries do not underflow to zero
    rows = np.linalg.norm(m / scale, ord=p, axis=1)
    return float(np.linalg.norm(rows, ord=q)) * scale


def abs_matrix(m) -> np.ndarray:
    return np.abs(np.asarray(m, dtype=np.float64))


def error_norms(approx, exact) -> tuple[float, float]:
    """Return ``(||approx - exact||_max, ||approx - exact||_F)``."""
    approx = np.asarray(approx, dtype=np.float64)
    exact = np.asarray(exact, dtype=np.float64)
    if approx.shape != exact.shape:
        raise DimensionMismatch(f"shape {approx.shape} != {exact.shape}")
    diff = approx - exact
    if diff.size == 0:
        return 0.0, 0.0
    return float(np.max(np.abs(diff))), float(np.linalg.norm(diff))


def read_matrix(path) -> np.ndarray:
    """Read a matrix from the text or ``AMM1`` binary format (auto-detected)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] == _MAGIC:
        if len(raw) < 20:
            raise BadSpec(f"{path}: truncated header")
        rows, cols = struct.unpack("<QQ", raw[4:20])
        body = raw[20:]
        if len(body) != 8 * rows * cols:
            raise BadSpec(f"{path}: expected {rows * cols} values, got {len(body) // 8}")
        m = np.frombuffer(body, dtype="<f8").reshape(rows, cols)
        return as_matrix(m, name=str(path))

    lines = [ln for ln in raw.decode("utf-8").split("\n") if ln.strip()]
    if not lines:
        raise BadSpec(f"{path}: empty matrix file")
    try:
        rows, cols = (int(t) for t in lines[0].split())
        values = [[float(t) for t in ln.split()] for ln in lines[1:]]
    except ValueError as exc:
        raise BadSpec(f"{path}: {exc}") from None
    if len(values) != rows or any(len(r) != cols for r in values):
        raise BadSpec(f"{path}: header says {rows}x{cols} but body disagrees")
    return as_matrix(np.array(values, dtype=np.float64).reshape(rows, cols), name=str(path))


def write_matrix(path, m, *, binary: bool = False) -> None:
    m = as_matrix(m)
    rows, cols = m.shape
    if binary:
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<QQ", rows, cols))
            fh.write(m.astype("<f8").tobytes())
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{rows} {cols}\n")
        for row in m:
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")
