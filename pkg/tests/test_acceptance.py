"""Acceptance criteria, one test each, at the stated tolerances and time limits.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line (bypassing
pytest's capture) before asserting.
"""
import math
import time

import numpy as np
import pytest

from amm.cli import RunConfig, generate, generate_chain, run
from amm.decomp import decompose, product_norm_1q
from amm.diag import (
    Accuracy,
    complexity_table,
    exhaustive_multi_covariance,
    exhaustive_sketch_covariance,
    exhaustive_walk_covariance,
    norm_order_checks,
    plan_samples,
    sketch_quantity,
    tug_of_war_pair_covariance,
    walk_quantity,
)
from amm.matcore import INF, STRASSEN, elementwise_norm, multiply_chain_exact, multiply_exact
from amm.sampler import RngStream
from amm.sketch import COLUMN_SAMPLE, FROBENIUS_OPTIMAL, MAX_NORM_OPTIMAL, TUG_OF_WAR, UNIFORM, estimate_multi_matrix, multi_trace_bound
from amm.walk import PROPORTIONAL_D0, PROPORTIONAL_D0_SQUARED, build_plan, walk_variance_bounds


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail, elapsed, limit):
        in_time = elapsed < limit
        status = "PASS" if ok and in_time else "FAIL"
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2} {status}  {title}: {detail}; {elapsed:.2f}s (limit {limit}s)")
        assert ok, detail
        assert in_time, f"took {elapsed:.2f}s, limit {limit}s"
    return emit


def corpus(count=200, seed=2024):
    """Random chains with k in 1..4, dims <= 16, entries U[-1, 1]."""
    r = np.random.default_rng(seed)
    out = []
    for i in range(count):
        k = 1 + i % 4
        dims = r.integers(1, 17, size=k + 1)
        out.append([r.uniform(-1, 1, (dims[j], dims[j + 1])) for j in range(k)])
    return out


def abs_chain(chain):
    return multiply_chain_exact([np.abs(c) for c in chain])


def test_01_decomposition_reconstruction(report):
    t0 = time.perf_counter()
    worst_rel, worst_row = 0.0, 0.0
    for chain in corpus():
        dec = decompose(chain)
        exact = multiply_chain_exact(chain)
        # relative to the magnitude of the summed terms, |A_1|...|A_k|
        scale = abs_chain(chain)
        diff = np.abs(dec.reconstruct() - exact)
        worst_rel = max(worst_rel, float(np.max(diff / np.where(scale > 0, scale, 1.0))))
        for f in dec.stochastic_factors:
            worst_row = max(worst_row, float(np.max(np.abs(np.abs(f).sum(axis=1) - 1))))
    ok = worst_rel <= 1e-9 and worst_row <= 1e-12
    report(1, "decomposition reconstruction", ok,
           f"max rel err {worst_rel:.1e} (<=1e-9), max |row sum - 1| {worst_row:.1e} (<=1e-12)",
           time.perf_counter() - t0, 5)


def test_02_norm_characterisation(report):
    t0 = time.perf_counter()
    worst = 0.0
    for chain in corpus():
        dec = decompose(chain)
        p = abs_chain(chain)
        for q in (1, 2, INF):
            direct = elementwise_norm(p, 1, q)
            worst = max(worst, abs(product_norm_1q(dec, q) - direct) / direct)
    report(2, "norm characterisation", worst <= 1e-9, f"max rel err {worst:.1e} (<=1e-9)",
           time.perf_counter() - t0, 5)


def small_chains(limit, count, seed):
    """Random chains whose path count n_0 n_1 ... n_k is at most ``limit``."""
    r = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        k = int(r.integers(1, 5))
        dims = r.integers(1, 7, size=k + 1)
        if np.prod(dims) <= limit:
            out.append([r.uniform(-1, 1, (dims[j], dims[j + 1])) for j in range(k)])
    return out


def test_03_walk_exhaustive_unbiasedness(report):
    t0 = time.perf_counter()
    worst = 0.0
    chains = small_chains(256, 300, seed=3)
    for chain in chains:
        rep = exhaustive_walk_covariance(chain)
        worst = max(worst, float(np.max(np.abs(rep.mean_exhaustive - multiply_chain_exact(chain)))))
    report(3, "walk exhaustive unbiasedness", worst <= 1e-10,
           f"{len(chains)} chains, max |E[X] - A1...Ak| {worst:.1e} (<=1e-10)", time.perf_counter() - t0, 10)


def test_04_walk_covariance_bounds(report):
    t0 = time.perf_counter()
    violations = []
    for i, chain in enumerate(small_chains(256, 100, seed=4)):
        p = abs_chain(chain)
        l11 = elementwise_norm(p, 1, 1)
        rep = exhaustive_walk_covariance(chain, PROPORTIONAL_D0)
        if rep.trace_exhaustive > l11 ** 2 + 1e-9:
            violations.append((i, "trace"))
        if rep.max_diag_exhaustive > elementwise_norm(p, INF, INF) * l11 + 1e-9:
            violations.append((i, "max"))
        sq = exhaustive_walk_covariance(chain, PROPORTIONAL_D0_SQUARED)
        if sq.max_diag_exhaustive > elementwise_norm(p, 1, 2) ** 2 + 1e-9:
            violations.append((i, "max d0^2"))
    report(4, "walk covariance bounds", not violations, f"100 instances, violations {violations}",
           time.perf_counter() - t0, 30)


def test_05_sketch_covariance_identities(report):
    t0 = time.perf_counter()
    r = np.random.default_rng(5)
    worst = {TUG_OF_WAR: 0.0, COLUMN_SAMPLE: 0.0}
    for kind in worst:
        for i in range(100):
            q = int(r.integers(1, 13))
            a = r.standard_normal((int(r.integers(1, 5)), q))
            b = r.standard_normal((q, int(r.integers(1, 5))))
            w = [FROBENIUS_OPTIMAL, MAX_NORM_OPTIMAL, UNIFORM][i % 3] if kind == COLUMN_SAMPLE else None
            rep = exhaustive_sketch_covariance(a, b, kind, w)
            worst[kind] = max(worst[kind], abs(rep.trace_exhaustive - rep.trace_closed_form))
    tensor_ok = True
    for dim in range(1, 6):
        d = np.eye(dim)
        expect = (np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d)) * (1 - d)[:, :, None, None]
        tensor_ok &= bool(np.array_equal(tug_of_war_pair_covariance(dim), expect))
    ok = max(worst.values()) <= 1e-10 and tensor_ok
    report(5, "sketch covariance identities", ok,
           f"max |trace diff| tug-of-war {worst[TUG_OF_WAR]:.1e}, column-sample {worst[COLUMN_SAMPLE]:.1e} "
           f"(<=1e-10); tensor exact {tensor_ok}", time.perf_counter() - t0, 60)


def test_06_multi_matrix_bound(report):
    t0 = time.perf_counter()
    r = np.random.default_rng(6)
    worst_ratio = 0.0
    for _ in range(50):
        dims = r.integers(1, 4, size=4)
        chain = [r.standard_normal((dims[j], dims[j + 1])) for j in range(3)]
        rep = exhaustive_multi_covariance(chain)
        bound = multi_trace_bound(chain)
        worst_ratio = max(worst_ratio, rep.trace_exhaustive / bound if bound else 0.0)
    report(6, "multi-matrix trace bound", worst_ratio <= 1.0,
           f"50 chains k=3, max Tr/bound {worst_ratio:.3f} (<=1)", time.perf_counter() - t0, 60)


def _eps_for(quantity, acc_norm, target_L, dim_union, delta=0.1):
    """Pick eps so the planner asks for about ``target_L`` samples."""
    log_term = math.log(dim_union / delta) if acc_norm == "max" else max(math.log(1 / delta), 1.0)
    return math.sqrt(2.0 * quantity * log_term / target_L)


def test_07_epsilon_delta_guarantee(report):
    t0 = time.perf_counter()
    r = np.random.default_rng(7)
    cases = [("walk", "max"), ("walk", "frob"), ("tow2", "frob"), ("colsample2", "frob")]
    rates = {}
    planned = {}
    for alg, norm in cases:
        a, b = r.standard_normal((16, 16)), r.standard_normal((16, 16))
        if alg == "walk":
            quantity = walk_quantity([a, b], norm)
        else:
            kind = TUG_OF_WAR if alg == "tow2" else COLUMN_SAMPLE
            quantity = sketch_quantity(a, b, kind, norm)
        eps = _eps_for(quantity, norm, 20_000, 256)
        acc = Accuracy(eps, 0.1, norm)
        rep = run(RunConfig(alg, acc, chain=[a, b], trials=200, seed=70))
        assert rep.planned_L == plan_samples(quantity, acc, 256)
        rates[f"{alg}/{norm}"] = rep.failure_rate
        planned[f"{alg}/{norm}"] = rep.planned_L
    ok = all(v <= 0.1 for v in rates.values()) and all(v <= 10**6 for v in planned.values())
    detail = ", ".join(f"{k} fail {v:.3f} at L={planned[k]}" for k, v in rates.items())
    report(7, "(eps, delta) guarantee", ok, detail + " (<=0.1)", time.perf_counter() - t0, 600)


def test_08_inverse_sqrt_convergence(report):
    from amm.sketch import estimate_two_matrix, tug_of_war_sketch
    from amm.walk import estimate_walk

    t0 = time.perf_counter()
    r = np.random.default_rng(8)
    a, b = r.standard_normal((16, 16)), r.standard_normal((16, 16))
    exact = a @ b
    plan = build_plan([a, b])
    L = 10**4

    def walk_err(n, t):
        return np.linalg.norm(estimate_walk(plan, n, RngStream(80, t)) - exact)

    def tow_err(n, t):
        return np.linalg.norm(estimate_two_matrix(a, b, tug_of_war_sketch(16, n, RngStream(81, t))) - exact)

    ratios = {}
    for name, err in (("walk", walk_err), ("tow2", tow_err)):
        lo = np.median([err(L, t) for t in range(50)])
        hi = np.median([err(4 * L, 1000 + t) for t in range(50)])
        ratios[name] = hi / lo
    ok = all(0.4 <= v <= 0.6 for v in ratios.values())
    report(8, "1/sqrt(L) convergence", ok,
           ", ".join(f"{k} ratio {v:.3f}" for k, v in ratios.items()) + " (in [0.4, 0.6])",
           time.perf_counter() - t0, 120)


def test_09_batched_fastmm_scaling(report):
    t0 = time.perf_counter()
    r = np.random.default_rng(9)
    chain = [r.standard_normal((16, 16)) for _ in range(3)]
    exact = multiply_chain_exact(chain)
    c = 64

    def med(size, offset):
        return np.median([np.linalg.norm(estimate_multi_matrix(chain, size, RngStream(90, offset + t), "fastmm")
                                         - exact) for t in range(50)])

    ratio = med(4 * c, 1000) / med(c, 0)
    report(9, "batched fast-multiply scaling", 0.4 <= ratio <= 0.6,
           f"median error ratio at 4c vs c (c={c}) {ratio:.3f} (in [0.4, 0.6])", time.perf_counter() - t0, 120)


def test_10_reference_instance_quantities(report):
    t0 = time.perf_counter()
    n = 64
    ones = abs_chain([generate(f"allones({n})", RngStream(0)) / n, generate(f"allones({n})", RngStream(0))])
    cl_ones = elementwise_norm(ones, 1, 2) ** 2
    ours_ones = elementwise_norm(ones, INF, INF) * elementwise_norm(ones, 1, 1)
    spike = generate(f"spikediag({n})", RngStream(0))
    spike_plan = build_plan([spike])
    cl_spike = walk_variance_bounds(spike_plan.dec, PROPORTIONAL_D0_SQUARED)[0]
    ours_spike = walk_variance_bounds(spike_plan.dec, PROPORTIONAL_D0)[0]
    ones_plan = build_plan([np.ones((n, n))])
    ok = (cl_ones == n ** 3 and ours_ones == n ** 2
          and walk_variance_bounds(ones_plan.dec, PROPORTIONAL_D0)[0] == n ** 2
          and walk_variance_bounds(ones_plan.dec, PROPORTIONAL_D0_SQUARED)[0] == n ** 3
          and math.isclose(cl_spike, 2 * n - 1, rel_tol=1e-12)
          and math.isclose(ours_spike, math.sqrt(n) * (n - 1 + math.sqrt(n)), rel_tol=1e-12))
    report(10, "reference instance quantities", ok,
           f"all-ones: {cl_ones:g} vs n^3={n ** 3}, {ours_ones:g} vs n^2={n ** 2}; "
           f"spike: {cl_spike:.6g} vs 2n-1={2 * n - 1}, {ours_spike:.6g} vs sqrt(n)(n-1+sqrt(n))="
           f"{math.sqrt(n) * (n - 1 + math.sqrt(n)):.6g}", time.perf_counter() - t0, 1)


def test_11_holder_partial_order(report):
    t0 = time.perf_counter()
    r = np.random.default_rng(11)
    failed = []
    for i in range(500):
        n = int(r.integers(1, 17))
        kind = i % 3
        if kind == 0:
            a, b = r.standard_normal((n, n)), r.standard_normal((n, n))
        elif kind == 1:
            a, b = r.uniform(0, 1, (n, n)), r.uniform(-1, 1, (n, n)) * (r.random((n, n)) < 0.3)
        else:
            a = np.diag(r.standard_normal(n)) * 10.0 ** r.integers(-3, 4)
            b = np.outer(r.standard_normal(n), r.standard_normal(n))
        failed += [(i, k) for k, v in norm_order_checks(a, b, slack=1e-12).items() if not v]
    report(11, "norm partial order and product lemma", not failed,
           f"1000 matrices, {len(failed)} violated inequalities", time.perf_counter() - t0, 5)


def test_12_strassen_equivalence(report):
    t0 = time.perf_counter()
    r = np.random.default_rng(12)
    shapes = [(256, 256, 256), (255, 257, 253), (129, 200, 67), (65, 65, 65), (1, 256, 1)]
    worst = 0.0
    for i in range(50):
        if i < len(shapes):
            n, q, m = shapes[i]
        else:
            n, q, m = (int(x) for x in r.integers(1, 257, size=3))
        a, b = r.uniform(-1, 1, (n, q)), r.uniform(-1, 1, (q, m))
        naive = multiply_exact(a, b)
        fast = multiply_exact(a, b, STRASSEN)
        scale = np.abs(a) @ np.abs(b)
        worst = max(worst, float(np.max(np.abs(fast - naive) / np.where(scale > 0, scale, 1.0))))
    report(12, "Strassen matches naive", worst <= 1e-9, f"50 products up to 256, max rel err {worst:.1e} (<=1e-9)",
           time.perf_counter() - t0, 30)


def test_13_stochastic_advantage(report):
    t0 = time.perf_counter()
    n = 64
    # random-walk transition matrices with out-degree 4 <= sqrt(n)
    a, b = generate_chain(f"stochastic({n},4)", 2, seed=13)
    rows = {(row.algorithm, row.norm): row for row in complexity_table(a, b, Accuracy(0.1, 0.1))}
    walk = rows["random-walk", "frob"]
    sketch = rows["sarlos-tug-of-war", "frob"]
    factor = sketch.predicted_time / walk.predicted_time
    l11 = math.sqrt(walk.quantity)
    ok = factor >= n and math.isclose(l11, n, rel_tol=1e-12)
    report(13, "stochastic-matrix advantage", ok,
           f"||AB||_11 = {l11:.6g} (= n), sketch/walk predicted cost {factor:.1f} (>= n = {n})",
           time.perf_counter() - t0, 1)
