"""
Stochastic decomposition of a matrix chain
==========================================

Any product A_1 ... A_k can be written as diag(d0) A'_1 ... A'_k where the
absolute value of every A'_l is row-stochastic. Its row weights d0 are the row
sums of |A_1| ... |A_k|, obtained here without forming that product.
"""

import numpy as np

from amm import INF, decompose, elementwise_norm, multiply_chain_exact, product_norm_1q

a = np.array([[1.0, -1.0], [2.0, 2.0]])
dec = decompose([a])
print("d0 =", dec.d0)
print("A' =\n", dec.stochastic_factors[0])
print("signs =\n", dec.sign_factors[0])

###############################################################################
# A longer chain with rectangular factors. Reconstruction is exact up to
# roundoff and every stochastic row sums to one.

rng = np.random.default_rng(1)
chain = [rng.uniform(-1, 1, (5, 7)), rng.uniform(-1, 1, (7, 3)), rng.uniform(-1, 1, (3, 6))]
dec = decompose(chain)
exact = multiply_chain_exact(chain)
print("reconstruction error:", np.max(np.abs(dec.reconstruct() - exact)))
for layer, f in enumerate(dec.stochastic_factors, start=1):
    print(f"layer {layer} row sums:", np.round(np.abs(f).sum(axis=1), 15))

###############################################################################
# The (1, q) norms of the absolute product come straight from d0.

absprod = multiply_chain_exact([np.abs(c) for c in chain])
for q in (1, 2, INF):
    print(f"q={q!r}: from d0 {product_norm_1q(dec, q):.6f}, direct {elementwise_norm(absprod, 1, q):.6f}")
