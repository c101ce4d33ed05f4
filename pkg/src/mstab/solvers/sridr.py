"""
SRIDR(s): short recycling for IDR(s).

The first ``J`` cycles reuse a fixed auxiliary block ``V`` (with ``V = A U``)
from a Sonneveld space ``G_J`` of an earlier solve together with that solve's
relaxations, so each of them costs a single product with ``A``::

    gamma      : r_j - V gamma  orthogonal to P
    r~, x~     = r_j - V gamma,  x_j + U gamma
    r_{j+1}    = r~ - omega_{j+1} A r~
    x_{j+1}    = x~ + omega_{j+1} r~

After level ``J`` the solver continues with ordinary IDR(s) cycles
(IDR(s)stab(1)) with freely chosen relaxations.
"""
from __future__ import annotations

import numpy as np

from ..errors import BreakdownError, MissingOmegas
from ..recycle import RecycleData
from ._common import CountingOperator, SolveReport, SolverConfig, Status, _Recorder, prepare
from .idrstab import IterationState, bicg_projection, level_iteration, poly_combination

__all__ = ["sridr_solve"]


def sridr_solve(A, b, recycle: RecycleData, x0=None, cfg: SolverConfig | None = None):
    """Solve ``A x = b`` with SRIDR(s) from IDR(s) recycling data.

    ``recycle`` must carry one relaxation per level (``len(omega_history) ==
    level``), i.e. come from an IDR(s)stab(1) run.

    Returns
    -------
    x : ndarray
    report : SolveReport
    """
    if recycle is None:
        raise ValueError("sridr_solve requires recycle data")
    cfg = SolverConfig(s=recycle.s) if cfg is None else cfg
    if cfg.ell != 1:
        raise ValueError("SRIDR is defined for ell == 1 only")
    if cfg.s != recycle.s:
        raise ValueError(f"recycle data has s={recycle.s}, config has s={cfg.s}")
    J = recycle.level
    if len(recycle.omega_history) < J:
        raise MissingOmegas(f"need {J} relaxations, recycle data holds {len(recycle.omega_history)}")
    omegas = recycle.omega_history[:J]
    if np.any(omegas == 0):
        raise MissingOmegas("recycled relaxations contain zeros")

    op, b, x = prepare(A, b, x0)
    s = cfg.s
    counter = CountingOperator(op)
    report = SolveReport(method="sridr", s=s, ell=1)
    record = _Recorder(report)
    P, U, V = recycle.P.copy(), recycle.U.copy(), recycle.V.copy()

    r = b - op.matvec(x)
    report.extra_mv += 1
    bnorm = np.linalg.norm(b)
    target = cfg.tol * bnorm
    rnorm = np.linalg.norm(r)
    record(0, 0, 0, rnorm)
    report.status = Status.CONVERGED
    while rnorm > target:
        stop = cfg.budget_left(counter.count, report.cycles)
        if stop is not None:
            report.status = stop
            break
        j = report.level
        try:
            if j < J:
                gamma = bicg_projection(P, V, r)
                rt = r - V @ gamma
                xt = x + U @ gamma
                omega = omegas[j]
                r = rt - omega * counter.matvec(rt)
                x = xt + omega * rt
                tau = np.array([omega])
            else:
                state = IterationState.start(x, r, U, V, 1, j)
                level_iteration(state, counter, P, 0)
                x, r, U, V, tau = poly_combination(state, 1)
        except BreakdownError as exc:
            report.status, report.message = Status.BREAKDOWN, str(exc)
            break
        report.cycles += 1
        report.level += 1
        report.omega_history.append(tau)
        if cfg.true_residual_each_cycle:
            r = b - op.matvec(x)
            report.extra_mv += 1
        rnorm = np.linalg.norm(r)
        record(report.cycles, counter.count, report.level, rnorm)

    report.h_mv = counter.count
    report.h_rd = report.level * s
    record.finish()
    return x, report
