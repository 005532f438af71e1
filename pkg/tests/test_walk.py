import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from amm.errors import AllZeroChain, BadSpec, UnsupportedQ
from amm.matcore import INF, elementwise_norm
from amm.sampler import RngStream
from amm.walk import (
    PROPORTIONAL_D0,
    PROPORTIONAL_D0_SQUARED,
    QChoice,
    absolute_product,
    build_plan,
    draw_walk,
    estimate_walk,
    estimate_walk_rowwise,
    walk_entry_variances,
    walk_variance_bounds,
)
from oracles import chain_loops, random_chain, walk_moments

A = np.array([[1.0, -1.0], [2.0, 2.0]])


def test_identity_plan():
    plan = build_plan([np.eye(2)])
    assert np.allclose(plan.q_dist.probs, [0.5, 0.5])
    for row in range(2):
        assert np.array_equal(plan.row_dist(0, row).probs, np.eye(2)[row])


def test_hand_plan():
    plan = build_plan([A])
    assert np.allclose(plan.q_dist.probs, [1 / 3, 2 / 3])
    assert plan.scale == 6.0
    sq = build_plan([A], PROPORTIONAL_D0_SQUARED)
    assert np.allclose(sq.q_dist.probs, [0.2, 0.8])


def test_row_dists_match_factors(rng):
    chain = random_chain(rng, 3, 6)
    plan = build_plan(chain)
    for layer, f in enumerate(plan.dec.stochastic_factors):
        for row in range(f.shape[0]):
            assert np.allclose(plan.row_dist(layer, row).probs, np.abs(f[row]), atol=1e-12)


def test_q_support_excludes_dead_rows():
    chain = [np.array([[0.0, 0.0], [1.0, -2.0]]), np.eye(2)]
    plan = build_plan(chain)
    assert plan.q_dist.probs[0] == 0
    est = estimate_walk(plan, 1000, RngStream(0))
    assert np.all(est[0] == 0)


def test_custom_q_validation():
    with pytest.raises(BadSpec):
        build_plan([np.array([[0.0, 0.0], [1.0, 1.0]])], QChoice.custom([1, 1]))
    with pytest.raises(BadSpec):
        build_plan([A], QChoice.custom([1, 1, 1]))
    with pytest.raises(BadSpec):
        QChoice("d0", np.ones(2))
    with pytest.raises(BadSpec):
        QChoice("weird")


def test_draw_walk_examples():
    r = RngStream(1)
    plan = build_plan([np.eye(2)])
    for _ in range(50):
        s = draw_walk(plan, r)
        assert s.start == s.end and s.sign == 1.0 and s.weight == 2.0
    perm = build_plan([np.array([[0.0, 1.0], [1.0, 0.0]])])
    for _ in range(50):
        s = draw_walk(perm, r)
        assert s.end == 1 - s.start
    hand = build_plan([A])
    seen = set()
    for _ in range(300):
        s = draw_walk(hand, r)
        assert s.weight == 6.0
        if (s.start, s.end) == (0, 1):
            assert s.sign == -1.0
        else:
            assert s.sign == 1.0
        seen.add((s.start, s.end))
    assert seen == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_zero_chain_short_circuits():
    plan = build_plan([np.zeros((3, 2)), np.zeros((2, 2))])
    assert plan.is_zero
    assert np.array_equal(estimate_walk(plan, 10, RngStream(0)), np.zeros((3, 2)))
    assert np.array_equal(estimate_walk_rowwise(plan, 10, RngStream(0)), np.zeros((3, 2)))
    assert np.array_equal(walk_entry_variances(plan), np.zeros((3, 2)))
    with pytest.raises(AllZeroChain):
        draw_walk(plan, RngStream(0))


def test_identity_convergence():
    plan = build_plan([np.eye(2)])
    bad = 0
    for t in range(100):
        est = estimate_walk(plan, 10**5, RngStream(3, t))
        assert est[0, 1] == 0 and est[1, 0] == 0
        bad += np.max(np.abs(est - np.eye(2))) > 0.02
    assert bad <= 1


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.sampled_from(["d0", "d0sq"]))
def test_exhaustive_unbiased_and_variance(seed, k, qkind):
    chain = random_chain(np.random.default_rng(seed), k, 4)
    q = QChoice(qkind)
    mean, var = walk_moments(chain, None if qkind == "d0" else decompose_d0(chain) ** 2)
    exact = chain_loops(chain)
    assert np.allclose(mean, exact, atol=1e-10)
    plan = build_plan(chain, q)
    assert np.allclose(walk_entry_variances(plan), var, atol=1e-10)
    p = absolute_product(plan.dec)
    bound_entry = plan.ratio[:, None] * p
    assert np.all(var <= bound_entry + 1e-9)
    zero = np.abs(exact) < 1e-15
    assert np.allclose(var[zero], bound_entry[zero], atol=1e-9)
    max_b, trace_b = walk_variance_bounds(plan.dec, q)
    assert var.max() <= max_b + 1e-9
    assert var.sum() <= trace_b + 1e-9
    if qkind == "d0":
        assert trace_b == pytest.approx(elementwise_norm(p, 1, 1) ** 2)
        assert max_b == pytest.approx(elementwise_norm(p, INF, INF) * elementwise_norm(p, 1, 1))
    else:
        assert max_b == pytest.approx(elementwise_norm(p, 1, 2) ** 2)


def decompose_d0(chain):
    return chain_loops([np.abs(c) for c in chain]).sum(axis=1)


def test_custom_q_exhaustive(rng):
    chain = random_chain(rng, 2, 4)
    w = rng.random(chain[0].shape[0]) + 0.1
    mean, var = walk_moments(chain, w)
    plan = build_plan(chain, QChoice.custom(w))
    assert np.allclose(mean, chain_loops(chain), atol=1e-10)
    assert np.allclose(walk_entry_variances(plan), var, atol=1e-10)
    with pytest.raises(UnsupportedQ):
        walk_variance_bounds(plan.dec, plan.q)


@pytest.mark.parametrize("n", [4, 16, 64])
def test_reference_instances(n):
    ones = build_plan([np.ones((n, n)) / n, np.ones((n, n))])
    max_b, trace_b = walk_variance_bounds(ones.dec, PROPORTIONAL_D0)
    assert max_b == pytest.approx(n ** 2, rel=1e-12)
    assert trace_b == pytest.approx(n ** 4, rel=1e-12)
    d = np.ones(n)
    d[0] = np.sqrt(n)
    spike = build_plan([np.diag(d)])
    assert walk_variance_bounds(spike.dec, PROPORTIONAL_D0)[0] == pytest.approx(np.sqrt(n) * (n - 1 + np.sqrt(n)))
    assert walk_variance_bounds(spike.dec, PROPORTIONAL_D0_SQUARED)[0] == pytest.approx(2 * n - 1)


def test_worker_count_independence(rng):
    plan = build_plan(random_chain(rng, 3, 8))
    kwargs = dict(num_samples=5000, block_size=700)
    one = estimate_walk(plan, rng=RngStream(5), workers=1, **kwargs)
    four = estimate_walk(plan, rng=RngStream(5), workers=4, **kwargs)
    assert np.array_equal(one, four)
    assert np.array_equal(one, estimate_walk(plan, rng=RngStream(5), **kwargs))


def test_untouched_entries_stay_zero(rng):
    a = np.diag(rng.standard_normal(6))
    plan = build_plan([a, np.eye(6)])
    est = estimate_walk(plan, 2000, RngStream(2))
    assert np.all(est[~np.eye(6, dtype=bool)] == 0)


def test_rejects_nonpositive_samples():
    plan = build_plan([A])
    with pytest.raises(ValueError):
        estimate_walk(plan, 0, RngStream(0))
    with pytest.raises(ValueError):
        estimate_walk_rowwise(plan, 0, RngStream(0))


def test_rowwise_baseline_is_unbiased(rng):
    chain = random_chain(rng, 2, 4)
    plan = build_plan(chain)
    exact = chain_loops(chain)
    runs = np.stack([estimate_walk_rowwise(plan, 4000, RngStream(8, t)) for t in range(200)])
    se = runs.std(axis=0) / np.sqrt(len(runs)) + 1e-12
    assert np.all(np.abs(runs.mean(axis=0) - exact) <= 5 * se + 1e-9)


def test_convergence_rate(rng):
    a = rng.standard_normal((16, 16))
    b = rng.standard_normal((16, 16))
    plan = build_plan([a, b])
    exact = a @ b

    def median_err(L):
        return np.median([np.linalg.norm(estimate_walk(plan, L, RngStream(21, t)) - exact)
                          for t in range(50)])

    ratio = median_err(4 * 10**4) / median_err(10**4)
    assert 0.4 <= ratio <= 0.6


def test_cost_linear_in_k():
    # min over repeats filters scheduler noise; the fixed per-sample cost
    # (start draw and accumulation) is what keeps the ratios below 2
    rng = np.random.default_rng(4)
    samples = 1 << 18
    times = []
    for k in (2, 4, 8, 16):
        plan = build_plan([rng.standard_normal((64, 64)) for _ in range(k)])
        best = np.inf
        for rep in range(9):
            t0 = time.perf_counter()
            estimate_walk(plan, samples, RngStream(rep))
            best = min(best, time.perf_counter() - t0)
        times.append(best)
    ratios = [t1 / t0 for t0, t1 in zip(times, times[1:])]
    assert all(1.6 <= r <= 2.6 for r in ratios), ratios
