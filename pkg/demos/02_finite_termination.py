"""
Finite termination of IDR(s)stab(l)
===================================

On tridiag(2, 3, 1) with N = 40 the residual must vanish once the Sonneveld
space is empty: after about N / s cycles.
"""

from mstab import SolverConfig, idrstab_solve, tridiag
from mstab.harness import make_rhs

A = tridiag(2, 3, 1, 40)
b = make_rhs("ones", 40)

for s, ell in [(1, 1), (2, 1), (4, 1), (4, 2)]:
    x, rep, _ = idrstab_solve(A, b, cfg=SolverConfig(s=s, ell=ell, tol=1e-8))
    print(f"IDR({s})stab({ell}): {rep.cycles:2d} cycles, level {rep.level:2d}, "
          f"{rep.h_mv:3d} MVs, final |r| = {rep.final_residual:.1e}")

# the residual history: flat while the space is large, then a sudden drop
_, rep, _ = idrstab_solve(A, b, cfg=SolverConfig(s=2))
for h in rep.residual_history[::4]:
    print(f"  cycle {h.cycle:2d}  mv {h.mv:3d}  |r| = {h.resnorm:.2e}")
