"""
Short-recurrence Krylov solvers for sequences of linear systems.

IDR(s)stab(ell) restricts residuals to shrinking Sonneveld spaces;
M(s,ell)stab reuses the cut-space and auxiliary vectors of an earlier solve
with the same matrix, so that later right-hand sides start in a small
M-space. The :mod:`mstab.subspace` module builds all those spaces densely
and serves as an independent check.
"""
from .errors import (BreakdownError, ConfigError, FingerprintMismatch, MstabError,
                     RankDeficient, ShiftSingular, SingularProjection, StaleData, ZeroPivot)
from .linalg import CsrMatrix, as_operator, tridiag
from .precond import PreconditionedOperator, SplitPreconditioner, build_ilu0, \
    build_preconditioner
from .recycle import FetchPolicy, RecycleData, fetch, load, save, validate
from .solvers import (SolveReport, SolverConfig, Status, bicg_solve, bicgstab_solve,
                      gmres_solve, idrstab_solve, mstab_solve, sridr_solve)

__version__ = "0.1.0"
