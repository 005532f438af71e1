"""
Random-walk estimation of a matrix product
==========================================

A sample draws a start row from q, walks through the stochastic factors and
returns a signed, weighted indicator of its start and end points. Its
average converges to the product at the Monte Carlo rate 1/sqrt(L).
"""

import numpy as np

from amm import PROPORTIONAL_D0, PROPORTIONAL_D0_SQUARED, Accuracy, RngStream, build_plan, estimate_walk, plan_samples
from amm.diag import exhaustive_walk_covariance
from amm.walk import walk_variance_bounds

rng = np.random.default_rng(2)
a, b = rng.standard_normal((16, 16)), rng.standard_normal((16, 16))
exact = a @ b
plan = build_plan([a, b])

###############################################################################
# Error against sample count. Quadrupling L roughly halves the error.

for L in (10**3, 4 * 10**3, 16 * 10**3, 64 * 10**3):
    errs = [np.linalg.norm(estimate_walk(plan, L, RngStream(0, t)) - exact) for t in range(20)]
    print(f"L = {L:6d}  median Frobenius error {np.median(errs):8.3f}")

###############################################################################
# Planning: the trace bound ||d0||_1^2 sets the Frobenius sample count.

max_bound, trace_bound = walk_variance_bounds(plan.dec, PROPORTIONAL_D0)
acc = Accuracy(epsilon=10.0, delta=0.1, norm="frob")
L = plan_samples(trace_bound, acc)
errs = [np.linalg.norm(estimate_walk(plan, L, RngStream(1, t)) - exact) for t in range(50)]
print(f"planned L = {L}, failures at eps = 10: {sum(e > 10 for e in errs)} of 50")

###############################################################################
# Two choices of start distribution on the spike instance diag(sqrt(n), 1, ...).
# Sampling proportionally to d0 gives a max-variance bound near n^1.5, the
# squared choice gives about 2n.

n = 64
spike = np.diag([np.sqrt(n)] + [1.0] * (n - 1))
spike_plan = build_plan([spike])
print("q ~ d0  :", walk_variance_bounds(spike_plan.dec, PROPORTIONAL_D0)[0])
print("q ~ d0^2:", walk_variance_bounds(spike_plan.dec, PROPORTIONAL_D0_SQUARED)[0])

###############################################################################
# Exact moments by enumerating every path of a small chain.

small = [rng.standard_normal((3, 3)) for _ in range(3)]
rep = exhaustive_walk_covariance(small)
print(f"Tr[Sigma] = {rep.trace_exhaustive:.4f} <= bound {rep.bound:.4f}")
