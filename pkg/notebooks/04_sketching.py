"""
Sketching estimators
====================

Tug-of-war sketches use random signs; column sampling picks inner indices
with importance weights. Both give unbiased estimates A S^T S B of AB.
"""

import numpy as np

from amm import COLUMN_SAMPLE, FROBENIUS_OPTIMAL, UNIFORM, RngStream, estimate_multi_matrix, estimate_two_matrix
from amm.diag import exhaustive_sketch_covariance
from amm.sketch import column_sample_sketch, sketch_trace_formula, tug_of_war_sketch

rng = np.random.default_rng(3)
a, b = rng.standard_normal((16, 32)), rng.standard_normal((32, 16))
exact = a @ b

for c in (16, 64, 256, 1024):
    tow = [np.linalg.norm(estimate_two_matrix(a, b, tug_of_war_sketch(32, c, RngStream(0, t))) - exact)
           for t in range(20)]
    col = [np.linalg.norm(estimate_two_matrix(a, b, column_sample_sketch(a, b, c, FROBENIUS_OPTIMAL,
                                                                         RngStream(1, t))) - exact)
           for t in range(20)]
    print(f"c = {c:5d}  tug-of-war {np.median(tow):7.3f}  column-sample {np.median(col):7.3f}")

###############################################################################
# The single-sample covariance trace, closed form against full enumeration.

small_a, small_b = rng.standard_normal((3, 6)), rng.standard_normal((6, 3))
rep = exhaustive_sketch_covariance(small_a, small_b)
print("tug-of-war trace:", rep.trace_closed_form, rep.trace_exhaustive)
rep = exhaustive_sketch_covariance(small_a, small_b, COLUMN_SAMPLE)
print("column-sample trace:", rep.trace_closed_form, rep.trace_exhaustive)

# Frobenius-optimal weights minimise that trace
print("uniform weights:", sketch_trace_formula(small_a, small_b, COLUMN_SAMPLE, UNIFORM))
print("optimal weights:", sketch_trace_formula(small_a, small_b, COLUMN_SAMPLE, FROBENIUS_OPTIMAL))

###############################################################################
# Longer chains: one sketch between every pair of neighbouring factors.

chain = [rng.standard_normal((16, 16)) for _ in range(3)]
exact3 = chain[0] @ chain[1] @ chain[2]
for c in (32, 128, 512):
    errs = [np.linalg.norm(estimate_multi_matrix(chain, c, RngStream(2, t), mode="fastmm") - exact3)
            for t in range(20)]
    print(f"k = 3, c = {c:4d}  median error {np.median(errs):9.2f}")
