"""
Reference Krylov solvers: full GMRES, BiCG and BiCGStab.

Textbook versions with the same report format as the IDR family. Their
``h_mv`` counts every product with ``A`` or ``A^H``.
"""
from __future__ import annotations

import numpy as np

from ._common import CountingOperator, SolveReport, Status, _Recorder, prepare

__all__ = ["gmres_solve", "bicg_solve", "bicgstab_solve"]

_TINY = 1e-300


def gmres_solve(A, b, x0=None, tol=1e-8, max_it=None):
    """Full-memory GMRES, modified Gram-Schmidt Arnoldi, Givens rotations, no restarts."""
    op, b, x = prepare(A, b, x0)
    n = op.shape[0]
    max_it = n if max_it is None else max_it
    counter = CountingOperator(op)
    report = SolveReport(method="gmres", s=1, ell=0)
    record = _Recorder(report)

    r = b - op.matvec(x)
    report.extra_mv += 1
    beta = np.linalg.norm(r)
    target = tol * np.linalg.norm(b)
    record(0, 0, 0, beta)
    if beta <= target:
        report.status = Status.CONVERGED
        record.finish()
        return x, report

    Q = np.zeros((n, max_it + 1), dtype=np.complex128)
    H = np.zeros((max_it + 1, max_it), dtype=np.complex128)
    cs = np.zeros(max_it, dtype=np.complex128)
    sn = np.zeros(max_it, dtype=np.complex128)
    g = np.zeros(max_it + 1, dtype=np.complex128)
    g[0] = beta
    Q[:, 0] = r / beta
    k = 0
    report.status = Status.MAX_MV
    for k in range(max_it):
        w = counter.matvec(Q[:, k])
        for i in range(k + 1):
            H[i, k] = np.vdot(Q[:, i], w)
            w = w - H[i, k] * Q[:, i]
        H[k + 1, k] = np.linalg.norm(w)
        happy = abs(H[k + 1, k]) <= 1e-14 * np.abs(H[:k + 2, k]).max()
        if not happy:
            Q[:, k + 1] = w / H[k + 1, k]
        for i in range(k):
            t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
            H[i + 1, k] = -np.conj(sn[i]) * H[i, k] + np.conj(cs[i]) * H[i + 1, k]
            H[i, k] = t
        a, c = H[k, k], H[k + 1, k]
        d = np.hypot(abs(a), abs(c))
        cs[k] = abs(a) / d if d else 1.0
        sn[k] = (a / abs(a) if a != 0 else 1.0) * np.conj(c) / d if d else 0.0
        H[k, k] = cs[k] * a + sn[k] * c
        H[k + 1, k] = 0.0
        g[k + 1] = -np.conj(sn[k]) * g[k]
        g[k] = cs[k] * g[k]
        res = abs(g[k + 1])
        report.cycles = report.level = k + 1
        record(k + 1, counter.count, k + 1, res)
        if res <= target or happy:
            report.status = Status.CONVERGED
            break
    m = report.cycles
    y = np.linalg.solve(np.triu(H[:m, :m]), g[:m]) if m else np.zeros(0)
    x = x + Q[:, :m] @ y
    report.h_mv = report.h_rd = counter.count
    record.finish()
    return x, report


def bicg_solve(A, b, x0=None, tol=1e-8, max_mv=10_000, shadow=None):
    """Bi-conjugate gradients; two products per iteration (``A`` and ``A^H``)."""
    op, b, x = prepare(A, b, x0)
    report = SolveReport(method="bicg", s=1, ell=0)
    record = _Recorder(report)
    mv = 0
    r = b - op.matvec(x)
    report.extra_mv += 1
    rt = r.copy() if shadow is None else np.asarray(shadow, dtype=np.complex128).copy()
    p, pt = r.copy(), rt.copy()
    rho = np.vdot(rt, r)
    target = tol * np.linalg.norm(b)
    rnorm = np.linalg.norm(r)
    record(0, 0, 0, rnorm)
    report.status = Status.CONVERGED
    while rnorm > target:
        if mv >= max_mv:
            report.status = Status.MAX_MV
            break
        q = op.matvec(p)
        qt = op.rmatvec(pt)
        mv += 2
        den = np.vdot(pt, q)
        if abs(den) <= 1e-14 * np.linalg.norm(pt) * np.linalg.norm(q) or abs(rho) < _TINY:
            report.status, report.message = Status.BREAKDOWN, "BiCG pivot breakdown"
            break
        alpha = rho / den
        x = x + alpha * p
        r = r - alpha * q
        rt = rt - np.conj(alpha) * qt
        rho_new = np.vdot(rt, r)
        beta = rho_new / rho
        rho = rho_new
        p = r + beta * p
        pt = rt + np.conj(beta) * pt
        rnorm = np.linalg.norm(r)
        report.cycles += 1
        record(report.cycles, mv, report.cycles, rnorm)
    report.level = report.cycles
    report.h_mv = report.h_rd = mv
    record.finish()
    return x, report


def bicgstab_solve(A, b, x0=None, tol=1e-8, max_mv=10_000, shadow=None):
    """BiCGStab (van der Vorst); two products with ``A`` per iteration.

    ``shadow`` is the fixed vector ``r^`` the residuals are made orthogonal
    to in the BiCG step (default: the initial residual).
    """
    op, b, x = prepare(A, b, x0)
    counter = CountingOperator(op)
    report = SolveReport(method="bicgstab", s=1, ell=1)
    record = _Recorder(report)
    r = b - op.matvec(x)
    report.extra_mv += 1
    rh = r.copy() if shadow is None else np.asarray(shadow, dtype=np.complex128).reshape(-1).copy()
    target = tol * np.linalg.norm(b)
    rnorm = np.linalg.norm(r)
    record(0, 0, 0, rnorm)
    p = np.zeros_like(r)
    v = np.zeros_like(r)
    rho_old = alpha = omega = 1.0
    report.status = Status.CONVERGED
    while rnorm > target:
        if counter.count >= max_mv:
            report.status = Status.MAX_MV
            break
        rho = np.vdot(rh, r)
        if abs(rho) <= 1e-15 * np.linalg.norm(rh) * rnorm:
            report.status, report.message = Status.BREAKDOWN, "rho breakdown"
            break
        if report.cycles == 0:
            p = r.copy()
        else:
            beta = (rho / rho_old) * (alpha / omega)
            p = r + beta * (p - omega * v)
        v = counter.matvec(p)
        den = np.vdot(rh, v)
        if abs(den) < _TINY:
            report.status, report.message = Status.BREAKDOWN, "alpha breakdown"
            break
        alpha = rho / den
        s = r - alpha * v
        if np.linalg.norm(s) <= target:
            x = x + alpha * p
            r = s
            rnorm = np.linalg.norm(r)
            report.cycles += 1
            record(report.cycles, counter.count, report.cycles, rnorm)
            break
        t = counter.matvec(s)
        tt = np.vdot(t, t)
        if abs(tt) < _TINY:
            report.status, report.message = Status.BREAKDOWN, "omega breakdown"
            break
        omega = np.vdot(t, s) / tt
        x = x + alpha * p + omega * s
        r = s - omega * t
        rho_old = rho
        rnorm = np.linalg.norm(r)
        report.cycles += 1
        record(report.cycles, counter.count, report.cycles, rnorm)
        if omega == 0:
            report.status, report.message = Status.BREAKDOWN, "omega vanished"
            break
    report.level = report.cycles
    report.h_mv = report.h_rd = counter.count
    record.finish()
    return x, report
