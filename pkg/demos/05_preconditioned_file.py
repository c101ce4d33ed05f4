"""
Preconditioned sequence from a Matrix Market file
=================================================

Writes a convection-diffusion-like matrix to disk, then runs a two
right-hand-side M(4,2)stab sequence with split ILU(0) preconditioning through
the same driver the command line uses.
"""

import tempfile
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from mstab import CsrMatrix, FetchPolicy
from mstab.harness import ExperimentConfig, run_sequence
from mstab.mmio import write_matrix_market

# 2-D grid, 5-point stencil with an upwind convection term
m = 30
T = sp.diags([-1.3, 4.0, -0.7], [-1, 0, 1], shape=(m, m))
I = sp.identity(m)
A = sp.kron(I, T) + sp.kron(sp.diags([-1.0, -1.0], [-1, 1], shape=(m, m)), I)
work = Path(tempfile.mkdtemp())
write_matrix_market(CsrMatrix.from_scipy(A.tocsr()), work / "cd.mtx", comment="convection-diffusion")

for precond in ("none", "ilu0"):
    cfg = ExperimentConfig(matrix_path=str(work / "cd.mtx"), rhs=["ones", "random:7"],
                           method="mstab", s=4, ell=2, precond=precond,
                           fetch=FetchPolicy.half_tolerance(), log_path=str(work / precond))
    reps = run_sequence(cfg)
    print(precond, [(r.method, r.h_mv, f"{r.true_relres:.1e}") for r in reps])

print("CSV logs in", work)
print((work / "ilu0" / "summary.csv").read_text())
