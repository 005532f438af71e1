"""
Element-wise matrix norms
=========================

An element-wise (p, q) norm takes the l_p norm of every row and then the
l_q norm of the resulting vector. The max-norm is (inf, inf) and the
Frobenius norm is (2, 2).
"""

import numpy as np

from amm import INF, elementwise_norm
from amm.diag import holder_chain, norm_order_checks

m = np.array([[1.0, 2.0], [3.0, 4.0]])
for p, q in [(1, 1), (INF, INF), (2, 2), (1, 2), (2, INF), (INF, 2)]:
    print(f"||M||_({p},{q}) = {elementwise_norm(m, p, q):.4f}")

# Mixed norms are not symmetric under transposition unless p == q
print("(1,2) of M   :", elementwise_norm(m, 1, 2))
print("(1,2) of M^T :", elementwise_norm(m.T, 1, 2))

###############################################################################
# The norms of a square matrix form a partial order once rescaled by
# powers of sqrt(n). Every quantity in the middle row lies between the
# (1,1) norm at the bottom and the (2,2) norm above it.

rng = np.random.default_rng(0)
x = rng.standard_normal((16, 16))
for name, value in sorted(holder_chain(x).items(), key=lambda kv: kv[1]):
    print(f"{name:>12s}  {value:10.3f}")

###############################################################################
# The product inequality ||(|A||B|)||_{1,1} <= ||A||_{2,1} ||B^T||_{2,1}
# follows from Cauchy-Schwarz on every inner product of a row and a column.

a, b = rng.standard_normal((16, 16)), rng.standard_normal((16, 16))
checks = norm_order_checks(a, b)
print(f"{sum(checks.values())} of {len(checks)} inequalities hold")
