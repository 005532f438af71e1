"""
Comparing predicted costs
=========================

Each algorithm's runtime is governed by a norm expression evaluated on the
inputs. For row-stochastic inputs with few nonzeros per row the random-walk
expression is smaller than the Frobenius sketch expression by a factor that
grows with n.
"""

import numpy as np

from amm import Accuracy, complexity_table
from amm.cli import generate_chain

acc = Accuracy(epsilon=0.1, delta=0.1)
a, b = generate_chain("stochastic(64,4)", 2, seed=0)
print(f"{'algorithm':>24s} {'norm':>5s} {'quantity':>12s} {'samples':>12s} {'time':>12s}")
for row in complexity_table(a, b, acc):
    tag = " (theory only)" if row.theory_only else ""
    print(f"{row.algorithm:>24s} {row.norm:>5s} {row.quantity:12.4g} {row.predicted_samples:12.4g} "
          f"{row.predicted_time:12.4g}{tag}")

###############################################################################
# The gap between the Frobenius sketch and the walk, against n and row degree.

for degree in ("", ",4", ",1"):
    gaps = []
    for n in (16, 32, 64, 128):
        a, b = generate_chain(f"stochastic({n}{degree})", 2, seed=0)
        rows = {(r.algorithm, r.norm): r for r in complexity_table(a, b, acc)}
        gaps.append(rows["sarlos-tug-of-war", "frob"].predicted_time / rows["random-walk", "frob"].predicted_time)
    label = "dense" if not degree else f"degree {degree[1:]}"
    print(f"{label:>9s}: " + "  ".join(f"{g:9.1f}" for g in gaps))
print("n        :", np.array([16, 32, 64, 128]))
