"""Benchmark harness: generate or load inputs, run an estimator, report errors.

Every error value is recomputed against the exact product of the same inputs.
Reports are JSON (schema ``amm-report/1``) or CSV with a fixed header.

Exit codes: 0 ok, 2 bad configuration, 3 dimension error, 4 enumeration guard.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import diag
from .diag import Accuracy, NormKind, plan_samples
from .errors import AMMError, BadSpec, DimensionMismatch
from .matcore import MultiplyBackend, check_chain, elementwise_norm, error_norms, multiply_chain_exact, read_matrix
from .sampler import RngStream, build_alias
from .sketch import (
    COLUMN_SAMPLE,
    FROBENIUS_OPTIMAL,
    MAX_NORM_OPTIMAL,
    TUG_OF_WAR,
    SamplingWeights,
    column_sample_sketch,
    estimate_multi_matrix,
    estimate_two_matrix,
    median_of_means,
    mom_repetitions,
    multi_trace_bound,
    sampling_probabilities,
    sketch_maxvar_formula,
    sketch_trace_formula,
    tug_of_war_sketch,
)
from .walk import PROPORTIONAL_D0, QChoice, build_plan, estimate_walk, estimate_walk_rowwise, walk_entry_variances, walk_variance_bounds

__all__ = [
    "ALGORITHMS",
    "CSV_COLUMNS",
    "SCHEMA",
    "RunConfig",
    "RunReport",
    "generate",
    "generate_chain",
    "run",
    "report_table",
    "main",
]

SCHEMA = "amm-report/1"
ALGORITHMS = ("walk", "walk-cl-baseline", "tow2", "colsample2", "tow-multi", "tow-multi-fast", "exact")
TWO_MATRIX = ("tow2", "colsample2")
WALKS = ("walk", "walk-cl-baseline")

# stream reserved for input generation, away from the per-trial ids
GEN_STREAM = 1 << 32
SKETCH_CHUNK = 1 << 14

CSV_COLUMNS = (
    "algorithm", "status", "norm", "epsilon", "delta", "k", "rows", "cols",
    "planned_L", "repetitions", "variance_quantity", "max_err", "frob_err", "failure_rate",
    "preprocessing_ns", "estimation_ns", "error",
)


# ------------------------------------------------------------------ generators

_SPEC = re.compile(r"^\s*([a-z]+)\s*\(([^()]*)\)\s*$")


def _parse_spec(spec: str):
    m = _SPEC.match(spec)
    if not m:
        raise BadSpec(f"cannot parse generator spec {spec!r}; expected name(args)")
    name, body = m.groups()
    try:
        args = [float(x) for x in body.split(",")] if body.strip() else []
    except ValueError as exc:
        raise BadSpec(f"non-numeric argument in {spec!r}") from exc
    return name, args


def _dims(args, count, spec):
    out = []
    for x in args[:count]:
        if x != int(x) or x < 1:
            raise BadSpec(f"dimensions must be positive integers in {spec!r}")
        out.append(int(x))
    return out


def generate(spec: str, rng: RngStream) -> np.ndarray:
    """Build one matrix from a descriptor such as ``gaussian(4,5)``.

    Kinds: ``gaussian(n,m)``, ``uniform(n,m,lo,hi)``, ``stochastic(n[,degree])``
    (nonnegative rows summing to 1, optionally with ``degree`` nonzeros per
    row), ``allones(n)``, ``spikediag(n)`` = ``diag(sqrt(n), 1, ..., 1)`` and
    ``sparse(n,m,density)``.
    """
    name, args = _parse_spec(spec)
    arity = {"gaussian": (2,), "uniform": (4,), "stochastic": (1, 2), "allones": (1,),
             "spikediag": (1,), "sparse": (3,)}
    if name not in arity:
        raise BadSpec(f"unknown generator {name!r}")
    if len(args) not in arity[name]:
        raise BadSpec(f"{name} takes {' or '.join(map(str, arity[name]))} arguments, got {len(args)}")
    g = rng.gen
    if name == "gaussian":
        n, m = _dims(args, 2, spec)
        return g.standard_normal((n, m))
    if name == "uniform":
        n, m = _dims(args, 2, spec)
        lo, hi = args[2], args[3]
        if not lo < hi:
            raise BadSpec("uniform needs lo < hi")
        return g.uniform(lo, hi, size=(n, m))
    if name == "stochastic":
        (n,) = _dims(args, 1, spec)
        degree = _dims(args[1:], 1, spec)[0] if len(args) == 2 else n
        if degree > n:
            raise BadSpec("degree cannot exceed n")
        w = np.zeros((n, n))
        for i in range(n):
            cols = g.choice(n, size=degree, replace=False)
            w[i, cols] = g.random(degree) + 1e-3
        w /= w.sum(axis=1, keepdims=True)
        return w
    if name == "allones":
        (n,) = _dims(args, 1, spec)
        return np.ones((n, n))
    if name == "spikediag":
        (n,) = _dims(args, 1, spec)
        d = np.ones(n)
        d[0] = math.sqrt(n)
        return np.diag(d)
    n, m = _dims(args, 2, spec)
    density = args[2]
    if not 0 < density <= 1:
        raise BadSpec("density must lie in (0, 1]")
    mask = g.random((n, m)) < density
    return np.where(mask, g.standard_normal((n, m)), 0.0)


def generate_chain(spec: str, k: int, seed: int) -> list[np.ndarray]:
    """``k`` factors from one spec, or one factor per ``;``-separated spec."""
    parts = [p for p in spec.split(";") if p.strip()]
    if len(parts) == 1:
        parts = parts * k
    elif k and len(parts) != k:
        raise BadSpec(f"got {len(parts)} generator specs for k = {k}")
    base = RngStream(seed, GEN_STREAM)
    return check_chain([generate(p, base.child(i)) for i, p in enumerate(parts)])


# ---------------------------------------------------------------- run / report

@dataclass
class RunConfig:
    """One experiment; knobs that do not apply to ``algorithm`` must stay at default."""

    algorithm: str
    accuracy: Accuracy
    gen: str | None = None
    k: int = 2
    inputs: Sequence[str] = ()
    chain: Sequence[np.ndarray] | None = field(default=None, repr=False)
    seed: int = 0
    samples: int | None = None
    q: QChoice = PROPORTIONAL_D0
    weights: SamplingWeights | None = None
    backend: MultiplyBackend = field(default_factory=lambda: MultiplyBackend("naive"))
    mode: str | None = None
    trials: int = 1
    repetitions: int | None = None
    covariance: bool = False

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise BadSpec(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        if self.trials < 1:
            raise BadSpec("trials must be >= 1")
        if self.samples is not None and self.samples < 1:
            raise BadSpec("samples must be >= 1")
        if self.q != PROPORTIONAL_D0 and self.algorithm not in WALKS:
            raise BadSpec("--q applies only to walk algorithms")
        if self.weights is not None and self.algorithm != "colsample2":
            raise BadSpec("--weights applies only to colsample2")
        if self.mode is not None and self.algorithm != "tow-multi":
            raise BadSpec("--mode applies only to tow-multi")
        if self.mode not in (None, "outer", "fastmm"):
            raise BadSpec(f"unknown mode {self.mode!r}")
        if self.repetitions is not None and self.repetitions < 1:
            raise BadSpec("repetitions must be >= 1")
        sources = (self.gen is not None) + bool(self.inputs) + (self.chain is not None)
        if sources != 1:
            raise BadSpec("give exactly one input source: a generator, input files or a chain")

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "epsilon": self.accuracy.epsilon,
            "delta": self.accuracy.delta,
            "norm": self.accuracy.norm.value,
            "safety_factor": self.accuracy.safety_factor,
            "gen": self.gen,
            "k": self.k,
            "inputs": list(self.inputs),
            "seed": self.seed,
            "samples": self.samples,
            "q": self.q.kind,
            "weights": None if self.weights is None else self.weights.kind,
            "backend": self.backend.kind,
            "mode": self.mode,
            "trials": self.trials,
            "repetitions": self.repetitions,
        }


@dataclass
class RunReport:
    config: dict
    shape: tuple[int, int]
    k: int
    planned_L: int
    repetitions: int
    variance_quantity: float
    max_err: float
    frob_err: float
    failure_rate: float
    preprocessing_ns: int
    estimation_ns: int
    trial_errors: list[dict]
    covariance: dict | None = None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "shape": list(self.shape),
            "k": self.k,
            "planned_L": self.planned_L,
            "repetitions": self.repetitions,
            "variance_quantity": self.variance_quantity,
            "max_err": self.max_err,
            "frob_err": self.frob_err,
            "failure_rate": self.failure_rate,
            "preprocessing_ns": self.preprocessing_ns,
            "estimation_ns": self.estimation_ns,
            "trial_errors": self.trial_errors,
            "covariance": self.covariance,
        }


def load_chain(config: RunConfig) -> list[np.ndarray]:
    if config.chain is not None:
        return check_chain(config.chain)
    if config.inputs:
        return check_chain([read_matrix(p) for p in config.inputs])
    return generate_chain(config.gen, config.k, config.seed)


def _variance_quantity(config: RunConfig, chain, plan, weights) -> tuple[float, int]:
    """``(V, d')`` for the planner, per algorithm and norm."""
    norm = config.accuracy.norm
    n, m = chain[0].shape[0], chain[-1].shape[1]
    d_union = n * m
    alg = config.algorithm
    if alg in WALKS:
        if plan.is_zero:
            return 0.0, d_union
        if config.q.kind == "custom":
            var = walk_entry_variances(plan)
            v = float(var.max()) if norm is NormKind.MAX else float(var.sum())
        else:
            max_b, trace_b = walk_variance_bounds(plan.dec, config.q)
            v = max_b if norm is NormKind.MAX else trace_b
        return v, d_union
    if alg in TWO_MATRIX:
        a, b = chain
        kind = TUG_OF_WAR if alg == "tow2" else COLUMN_SAMPLE
        if norm is NormKind.FROBENIUS:
            if kind == COLUMN_SAMPLE and weights.kind != "frob":
                return sketch_trace_formula(a, b, kind, weights), d_union
            return elementwise_norm(a, 2, 2) ** 2 * elementwise_norm(b, 2, 2) ** 2, d_union
        return sketch_maxvar_formula(a, b, kind, weights), d_union
    return multi_trace_bound(chain), d_union


def _default_weights(config: RunConfig) -> SamplingWeights | None:
    if config.algorithm != "colsample2":
        return None
    if config.weights is not None:
        return config.weights
    return MAX_NORM_OPTIMAL if config.accuracy.norm is NormKind.MAX else FROBENIUS_OPTIMAL


def _covariance(config: RunConfig, chain, weights) -> dict | None:
    alg = config.algorithm
    if alg in WALKS:
        return diag.exhaustive_walk_covariance(chain, config.q).to_dict()
    if alg == "tow2":
        return diag.exhaustive_sketch_covariance(*chain, TUG_OF_WAR).to_dict()
    if alg == "colsample2":
        return diag.exhaustive_sketch_covariance(*chain, COLUMN_SAMPLE, weights).to_dict()
    if alg in ("tow-multi", "tow-multi-fast"):
        return diag.exhaustive_multi_covariance(chain).to_dict()
    return None


def _chunked(c: int, rng: RngStream, estimate) -> np.ndarray:
    """A ``c``-row sketch estimate built from row chunks of at most SKETCH_CHUNK.

    A ``c``-row sketch estimate is the mean of its rows' rank-one terms, so
    chunk ``j`` with ``c_j`` rows (drawn from ``rng.child(j)``) enters with
    weight ``c_j / c``. Memory stays bounded for large planned sizes.
    """
    sizes = [SKETCH_CHUNK] * (c // SKETCH_CHUNK)
    if c % SKETCH_CHUNK:
        sizes.append(c % SKETCH_CHUNK)
    out = None
    for j, cj in enumerate(sizes):
        part = estimate(cj, rng.child(j)) * (cj / c)
        out = part if out is None else out + part
    return out


def run(config: RunConfig) -> RunReport:
    """Plan, estimate and measure ``config.trials`` independent runs.

    Trial ``t`` draws from stream ``(seed, t)``. Preprocessing time covers the
    decomposition, alias tables or sampling weights and the planner; estimation
    time covers sampling and the products.
    """
    config.validate()
    chain = load_chain(config)
    alg = config.algorithm
    k = len(chain)
    if alg in TWO_MATRIX and k != 2:
        raise DimensionMismatch(f"{alg} multiplies exactly two matrices, got {k}")
    if alg in ("tow-multi", "tow-multi-fast") and k < 2:
        raise BadSpec(f"{alg} needs at least two matrices")
    acc = config.accuracy
    exact = multiply_chain_exact(chain, config.backend)
    weights = _default_weights(config)
    mode = "fastmm" if alg == "tow-multi-fast" else (config.mode or "outer")

    if config.repetitions is not None:
        reps = config.repetitions
    elif alg == "tow-multi-fast":
        reps = mom_repetitions(acc.delta)
    else:
        reps = 1

    trial_errors = []
    planned = 0
    quantity = 0.0
    pre_total = est_total = 0
    for t in range(config.trials):
        rng = RngStream(config.seed, t)
        t0 = time.perf_counter_ns()
        plan = dist = None
        if alg in WALKS:
            plan = build_plan(chain, config.q)
        elif alg == "colsample2":
            p = sampling_probabilities(chain[0], chain[1], weights)
            dist = build_alias(p) if np.any(p > 0) else None
        if alg == "exact":
            planned, quantity = 0, 0.0
        else:
            quantity, d_union = _variance_quantity(config, chain, plan, weights)
            if alg == "tow-multi-fast" and reps > 1:
                # Chebyshev at success 3/4 per repetition, boosted by the median
                planned = max(1, math.ceil(4.0 * quantity / acc.epsilon ** 2))
            else:
                planned = plan_samples(quantity, acc, d_union)
            if config.samples is not None:
                planned = config.samples
        t1 = time.perf_counter_ns()

        if alg == "exact":
            est = multiply_chain_exact(chain, config.backend)
        elif alg == "walk":
            est = estimate_walk(plan, planned, rng)
        elif alg == "walk-cl-baseline":
            est = estimate_walk_rowwise(plan, planned, rng)
        elif alg == "tow2":
            est = _chunked(planned, rng, lambda c, r: estimate_two_matrix(
                chain[0], chain[1], tug_of_war_sketch(chain[0].shape[1], c, r), config.backend))
        elif alg == "colsample2":
            if dist is None:
                est = np.zeros_like(exact)
            else:
                est = _chunked(planned, rng, lambda c, r: estimate_two_matrix(
                    chain[0], chain[1], column_sample_sketch(chain[0], chain[1], c, weights, r, dist=dist),
                    config.backend))
        else:
            outs = [estimate_multi_matrix(chain, planned, rng.child(r), mode, config.backend)
                    for r in range(reps)]
            est = outs[0] if reps == 1 else median_of_means(outs)
        t2 = time.perf_counter_ns()

        max_err, frob_err = error_norms(est, exact)
        trial_errors.append({"trial": t, "max_err": max_err, "frob_err": frob_err,
                             "preprocessing_ns": t1 - t0, "estimation_ns": t2 - t1})
        pre_total += t1 - t0
        est_total += t2 - t1

    key = "max_err" if acc.norm is NormKind.MAX else "frob_err"
    failures = sum(e[key] > acc.epsilon for e in trial_errors)
    cov = _covariance(config, chain, weights) if config.covariance else None
    return RunReport(
        config=config.to_dict(),
        shape=exact.shape,
        k=k,
        planned_L=int(planned),
        repetitions=reps if alg != "exact" else 0,
        variance_quantity=float(quantity),
        max_err=float(np.median([e["max_err"] for e in trial_errors])),
        frob_err=float(np.median([e["frob_err"] for e in trial_errors])),
        failure_rate=failures / config.trials,
        preprocessing_ns=pre_total // config.trials,
        estimation_ns=est_total // config.trials,
        trial_errors=trial_errors,
        covariance=cov,
    )


def _error_object(exc: AMMError) -> dict:
    return {"type": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}


def report_table(configs: Sequence[RunConfig]) -> list[dict]:
    """Run every config; one row per config with ``status`` ``ok`` or ``error``.

    Columns are :data:`CSV_COLUMNS`. Failing rows keep the config fields and
    carry the error message; the other rows are unaffected.
    """
    if not configs:
        raise BadSpec("report_table needs at least one config")
    rows = []
    for cfg in configs:
        acc = cfg.accuracy
        row = dict.fromkeys(CSV_COLUMNS)
        row.update(algorithm=cfg.algorithm, norm=acc.norm.value, epsilon=acc.epsilon, delta=acc.delta)
        try:
            rep = run(cfg)
        except AMMError as exc:
            row.update(status="error", error=_error_object(exc))
        else:
            row.update(
                status="ok", k=rep.k, rows=rep.shape[0], cols=rep.shape[1], planned_L=rep.planned_L,
                repetitions=rep.repetitions, variance_quantity=rep.variance_quantity,
                max_err=rep.max_err, frob_err=rep.frob_err, failure_rate=rep.failure_rate,
                preprocessing_ns=rep.preprocessing_ns, estimation_ns=rep.estimation_ns,
                report=rep,
            )
        rows.append(row)
    return rows


def to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for r in rows:
        r = dict(r)
        if isinstance(r.get("error"), dict):
            r["error"] = f"{r['error']['type']}: {r['error']['message']}"
        writer.writerow(r)
    return buf.getvalue()


def to_json(rows: Sequence[dict], complexity: list | None = None) -> str:
    runs = []
    for r in rows:
        if r["status"] == "ok":
            runs.append({"status": "ok", **r["report"].to_dict()})
        else:
            runs.append({"status": "error", "algorithm": r["algorithm"], "error": r["error"]})
    doc = {"schema": SCHEMA, "runs": runs}
    if complexity is not None:
        doc["complexity"] = complexity
    return json.dumps(doc, indent=2, default=float)


# ------------------------------------------------------------------------ main

def _weights_arg(text: str | None) -> SamplingWeights | None:
    if text is None:
        return None
    if text.startswith("custom:"):
        return SamplingWeights.custom(np.loadtxt(text[7:], ndmin=1))
    return SamplingWeights(text)


def _q_arg(text: str) -> QChoice:
    if text.startswith("custom:"):
        return QChoice.custom(np.loadtxt(text[7:], ndmin=1))
    return QChoice(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="amm", description="Randomized approximate matrix multiplication harness.")
    p.add_argument("--algo", default="walk", help=f"comma-separated list from {{{','.join(ALGORITHMS)}}}")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--gen", help="generator spec, e.g. 'gaussian(16,16)'; ';' separates per-factor specs")
    src.add_argument("--in-a", help="first input matrix file")
    src.add_argument("--in-chain", help="comma-separated matrix files")
    p.add_argument("--in-b", help="second input matrix file (with --in-a)")
    p.add_argument("--k", type=int, default=2, help="chain length for a single generator spec")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--norm", choices=("max", "frob"), default="frob")
    p.add_argument("--safety", type=float, default=2.0, help="planner safety factor")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, help="override the planned sample count / sketch size")
    p.add_argument("--q", default="d0", help="d0, d0sq or custom:FILE")
    p.add_argument("--weights", help="frob, max, uniform or custom:FILE")
    p.add_argument("--backend", choices=("naive", "strassen"), default="naive")
    p.add_argument("--mode", choices=("outer", "fastmm"))
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--repetitions", type=int, help="median-of-means repetitions")
    p.add_argument("--covariance", action="store_true", help="attach the exhaustive covariance report")
    p.add_argument("--complexity", action="store_true", help="attach the complexity table (two matrices)")
    p.add_argument("--out", choices=("json", "csv"), default="json")
    p.add_argument("--report", help="write the report here instead of stdout")
    return p


def _configs(args) -> list[RunConfig]:
    acc = Accuracy(args.eps, args.delta, NormKind(args.norm), args.safety)
    if args.in_a:
        if not args.in_b:
            raise BadSpec("--in-a needs --in-b")
        inputs = [args.in_a, args.in_b]
    elif args.in_chain:
        inputs = [s for s in args.in_chain.split(",") if s]
    else:
        inputs = []
    if args.in_b and not args.in_a:
        raise BadSpec("--in-b needs --in-a")
    gen = args.gen if not inputs else None
    if gen is None and not inputs:
        raise BadSpec("give --gen, --in-a/--in-b or --in-chain")
    q = _q_arg(args.q)
    weights = _weights_arg(args.weights)
    out = []
    for algo in [a.strip() for a in args.algo.split(",") if a.strip()]:
        out.append(RunConfig(
            algorithm=algo, accuracy=acc, gen=gen, k=args.k, inputs=inputs, seed=args.seed,
            samples=args.samples,
            q=q if algo in WALKS else PROPORTIONAL_D0,
            weights=weights if algo == "colsample2" else None,
            backend=MultiplyBackend(args.backend),
            mode=args.mode if algo == "tow-multi" else None,
            trials=args.trials, repetitions=args.repetitions, covariance=args.covariance,
        ))
    return out


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        configs = _configs(args)
        rows = report_table(configs)
        complexity = None
        if args.complexity:
            chain = load_chain(configs[0])
            if len(chain) != 2:
                raise BadSpec("--complexity needs exactly two matrices")
            complexity = [r.to_dict() for r in diag.complexity_table(*chain, configs[0].accuracy)]
    except AMMError as exc:
        _emit(json.dumps({"schema": SCHEMA, "error": _error_object(exc)}), args.report)
        return exc.exit_code
    except OSError as exc:
        _emit(json.dumps({"schema": SCHEMA, "error": {"type": "OSError", "message": str(exc),
                                                       "exit_code": 2}}), args.report)
        return 2
    _emit(to_csv(rows) if args.out == "csv" else to_json(rows, complexity), args.report)
    failed = [r for r in rows if r["status"] == "error"]
    if failed and len(failed) == len(rows):
        return failed[0]["error"]["exit_code"]
    return 0


if __name__ == "__main__":
    sys.exit(main())
