"""
Sonneveld spaces and M-spaces on a small matrix
===============================================

Builds the shrinking spaces G_j densely and watches their dimension drop by
s per level, then widens them into M-spaces by adding one direction per
level.
"""

import numpy as np

from mstab import tridiag
from mstab.subspace import (mspace_sequence, same_subspace, sonneveld_direct,
                            sonneveld_recursive, span, zero_space)

N, s = 40, 2
A = tridiag(2, 3, 1, N).toarray()
rng = np.random.default_rng(5)
P = span(rng.standard_normal((N, s)))
omegas = rng.uniform(0.2, 0.4, 31)

# the literal recursion G_j = (I - w_j A)(G_{j-1} ∩ P^perp)
dims = [sonneveld_recursive(A, P, omegas, j).dim for j in range(21)]
print("dim G_j, j = 0..20:", dims)

# the closed form agrees with the recursion
G5 = sonneveld_recursive(A, P, omegas, 5)
print("recursive == direct at j = 5:", same_subspace(G5, sonneveld_direct(A, P, omegas, 5)))

# add b2 to the first 19 levels: the space starts 19 dimensions wider at level 19
b2 = np.sin(2 * np.pi / N * np.arange(1, N + 1))
Q = [span(b2[:, None])] * 19 + [zero_space(N)] * 12
M = mspace_sequence(A, [P] * 31, Q, omegas, 31)
print("dim M_j, j = 19..30:", [m.dim for m in M[19:]])
