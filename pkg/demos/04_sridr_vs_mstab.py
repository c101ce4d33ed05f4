"""
SRIDR and M(s,l)stab: two ways to reuse a Sonneveld space
=========================================================

SRIDR moves the new residual into G_J with the old relaxations, one product
per level. M(s,l)stab instead widens G_J so it already holds the residual.
Both reduce about the same number of dimensions per product.
"""

import numpy as np

from mstab import FetchPolicy, SolverConfig, idrstab_solve, mstab_solve, sridr_solve, tridiag

N, s, J = 40, 4, 8
A = tridiag(2, 3, 1, N)
b1 = np.ones(N)
b2 = np.random.default_rng(0).standard_normal(N)

_, _, data = idrstab_solve(A, b1, cfg=SolverConfig(s=s), fetch_policy=FetchPolicy.at_cycle(J))

cfg = SolverConfig(s=s, tol=1e-8)
_, rs = sridr_solve(A, b2, data, cfg=cfg)
_, rm, _ = mstab_solve(A, b2, data, cfg=cfg)
for rep in (rs, rm):
    print(f"{rep.method:6s} h_mv = {rep.h_mv:3d}  h_rd = {rep.h_rd:3d}  "
          f"converged = {rep.converged}  cycles = {rep.cycles}")

# the recycled SRIDR cycles have no residual minimisation: the norm may grow
print("SRIDR residuals in the recycled phase:", np.round(rs.residual_norms[:J + 1], 3))
