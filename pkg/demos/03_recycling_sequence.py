"""
Recycling for a second right-hand side
======================================

Solve A x = b1 with IDR(2)stab(1), fetch (P, U, V) at cycle 19, and reuse it
for b2. The second solve starts at level 19 and needs only the remaining
dimensions.
"""

import tempfile
from pathlib import Path

from mstab import FetchPolicy, SolverConfig, idrstab_solve, load, mstab_solve, save, tridiag, validate
from mstab.harness import make_rhs

A = tridiag(2, 3, 1, 40)
b1, b2 = make_rhs("ones", 40), make_rhs("sinewave", 40)
cfg = SolverConfig(s=2, tol=1e-8)

_, rep1, data = idrstab_solve(A, b1, cfg=cfg, fetch_policy=FetchPolicy.at_cycle(19))
print(f"first solve: {rep1.cycles} cycles, {rep1.h_mv} MVs, fetched at level {data.level}")

# the data survives a round trip through an .mrd file
path = Path(tempfile.mkdtemp()) / "tridiag40.mrd"
save(data, path)
data = load(path)
print("validation:", validate(data, A))

_, rep2, _ = mstab_solve(A, b2, data, cfg=cfg)
print(f"second solve: {rep2.cycles} cycles, {rep2.h_mv} MVs, levels {rep2.start_level}->{rep2.level}")

# without recycling
_, rep3, _ = idrstab_solve(A, b2, cfg=cfg)
print(f"second rhs without recycling: {rep3.cycles} cycles, {rep3.h_mv} MVs")
