"""
IDR(s)stab(ell) and its recycling form M(s,ell)stab.

One outer cycle runs ``ell`` level iterations, each moving the residual and
the ``s`` auxiliary vectors one Sonneveld (or M-space) level up at the price
of ``s + 1`` products with ``A``, followed by a degree-``ell`` minimal
residual combination of the stored level vectors.

M(s,ell)stab is the very same loop started from ``(P, U, V)`` captured during
an earlier solve with the same matrix.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import BreakdownError, RankDeficient
from ..linalg import least_squares_tall, orthonormalize, solve_small
from ..recycle import CycleSnapshot, FetchPolicy, RecycleData, fetch, fingerprint
from ..subspace import omegas_from_tau
from ._common import CountingOperator, SolveReport, SolverConfig, Status, _Recorder, prepare

__all__ = [
    "IterationState",
    "generate_cut_space",
    "arnoldi_init",
    "bicg_projection",
    "level_iteration",
    "poly_combination",
    "idrstab_solve",
    "mstab_solve",
]


class DegenerateTailWarning(RuntimeWarning):
    pass


def generate_cut_space(n, s, seed=0, real=True):
    """Seeded Gaussian ``N x s`` block with orthonormal columns."""
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((n, s))
    if not real:
        P = P + 1j * rng.standard_normal((n, s))
    Q, rank = orthonormalize(P)
    while rank < s:  # practically unreachable for Gaussian data
        Q, rank = orthonormalize(np.hstack([Q, rng.standard_normal((n, s - rank))]))
    return Q


def arnoldi_init(A, r0, s, rng=None):
    """Orthonormal basis ``U`` of ``K_s(A; r0)`` and ``V = A U``.

    Modified Gram-Schmidt; exactly ``s`` products with ``A``. If the Krylov
    space is exhausted early, it is padded with random orthonormal directions
    (each still costs one product for its image).
    """
    n = r0.shape[0]
    if s > n:
        raise ValueError("s cannot exceed N")
    nrm = np.linalg.norm(r0)
    if nrm == 0:
        raise ValueError("r0 must be nonzero")
    rng = np.random.default_rng(0) if rng is None else rng
    U = np.zeros((n, s), dtype=np.complex128)
    V = np.zeros((n, s), dtype=np.complex128)
    U[:, 0] = r0 / nrm
    for k in range(s):
        V[:, k] = A.matvec(U[:, k])
        if k + 1 == s:
            break
        w = V[:, k].copy()
        scale = np.linalg.norm(w)
        for i in range(k + 1):
            w -= np.vdot(U[:, i], w) * U[:, i]
        h = np.linalg.norm(w)
        while h <= 1e-12 * max(scale, 1.0):
            # happy breakdown: continue with a random direction
            w = rng.standard_normal(n).astype(np.complex128)
            scale = np.linalg.norm(w)
            for _ in range(2):
                for i in range(k + 1):
                    w -= np.vdot(U[:, i], w) * U[:, i]
            h = np.linalg.norm(w)
        U[:, k + 1] = w / h
    return U, V


def bicg_projection(P, block, target):
    """``gamma`` with ``target - block @ gamma`` orthogonal to ``range(P)``.

    The ``s x s`` system ``(P^H block) gamma = P^H target`` is column-scaled
    before elimination so the singularity test does not depend on the
    (arbitrary) lengths of the auxiliary vectors.
    """
    M = P.conj().T @ block
    d = np.abs(M).max(axis=0)
    d[d == 0] = 1.0
    return solve_small(M / d, P.conj().T @ target) / d


@dataclass
class IterationState:
    """Level vectors inside one outer cycle.

    ``r_levels[i]`` is ``r^(i)`` and ``v_levels[i + 1]`` is the block
    ``V^(i)`` (so ``v_levels[0]`` holds the pre-images ``U``).
    """

    x0: np.ndarray
    r_levels: np.ndarray     # (ell + 1, N)
    v_levels: np.ndarray     # (ell + 2, N, s)
    level_j: int

    @classmethod
    def start(cls, x, r, U, V, ell, level_j=0):
        n, s = U.shape
        R = np.zeros((ell + 1, n), dtype=np.complex128)
        Vl = np.zeros((ell + 2, n, s), dtype=np.complex128)
        R[0] = r
        Vl[0] = U
        Vl[1] = V
        return cls(np.array(x, dtype=np.complex128), R, Vl, level_j)

    @property
    def ell(self):
        return self.r_levels.shape[0] - 1


def level_iteration(state: IterationState, A, P, k):
    """Level iteration ``k`` (``0 <= k < ell``); ``s + 1`` products with ``A``.

    Afterwards ``r^(0)`` and every ``v_q^(0)`` are orthogonal to
    ``K_{k+1}(A^H; P)``.
    """
    R, Vl = state.r_levels, state.v_levels
    s = P.shape[1]
    # BiCG step on r^(k), propagated to lower levels and to x
    gamma = bicg_projection(P, Vl[k + 1], R[k])
    for i in range(k + 1):
        R[i] -= Vl[i + 1] @ gamma
    state.x0 += Vl[0] @ gamma
    R[k + 1] = A.matvec(R[k])
    # new auxiliary vectors from r^(k+1), one column at a time
    for q in range(s):
        block_k = np.hstack([Vl[k + 2][:, :q], Vl[k + 1][:, q:]])
        eta = bicg_projection(P, block_k, R[k + 1])
        for i in range(-1, k + 1):
            block_i = np.hstack([Vl[i + 2][:, :q], Vl[i + 1][:, q:]])
            Vl[i + 1][:, q] = R[i + 1] - block_i @ eta
        Vl[k + 2][:, q] = A.matvec(Vl[k + 1][:, q])
    return state


def poly_combination(state: IterationState, ell=None):
    """Degree-``ell`` residual minimisation over the level vectors.

    Returns ``(x, r, U, V, tau)``; no products with ``A``.
    """
    ell = state.ell if ell is None else ell
    R, Vl = state.r_levels, state.v_levels
    tau = least_squares_tall(R[1:ell + 1].T, R[0])
    tmax = np.abs(tau).max()
    if abs(tau[-1]) < 1e-12 * tmax:
        # a vanishing leading coefficient would mean a zero relaxation
        phase = tau[-1] / abs(tau[-1]) if tau[-1] != 0 else 1.0
        tau[-1] = phase * 1e-12 * tmax
        warnings.warn("degenerate stabilization polynomial, tau_ell perturbed",
                      DegenerateTailWarning, stacklevel=2)
    r = R[0] - tau @ R[1:ell + 1]
    x = state.x0 + tau @ R[0:ell]
    V = Vl[1] - np.tensordot(tau, Vl[2:ell + 2], axes=1)
    U = Vl[0] - np.tensordot(tau, Vl[1:ell + 1], axes=1)
    return x, r, U, V, tau


def _is_real_problem(op, b):
    real_op = getattr(op, "is_real", False)
    return bool(real_op and np.all(b.imag == 0))


def idrstab_solve(A, b, x0=None, cfg: SolverConfig | None = None,
                  recycle: RecycleData | None = None,
                  fetch_policy: FetchPolicy | None = None, callback=None):
    """Solve ``A x = b`` with IDR(s)stab(ell), or M(s,ell)stab if ``recycle`` is given.

    Parameters
    ----------
    A : operator
        Anything with ``shape`` and ``matvec``; dense or scipy sparse arrays
        are wrapped.
    b, x0 : array_like
    cfg : SolverConfig
    recycle : RecycleData, optional
        ``(P, U, V)`` from an earlier solve with the same ``A``. Replaces the
        random cut-space and the Arnoldi start.
    fetch_policy : FetchPolicy, optional
        When to capture recycling data for a later solve.
    callback : callable, optional
        ``callback(cycle, snapshot)`` after every cycle.

    Returns
    -------
    x : ndarray
    report : SolveReport
    out : RecycleData
        The fetched data if the policy triggered, otherwise the final state.
    """
    cfg = SolverConfig() if cfg is None else cfg
    op, b, x = prepare(A, b, x0)
    n = op.shape[0]
    s, ell = cfg.s, cfg.ell
    counter = CountingOperator(op)
    fetch_policy = fetch_policy or FetchPolicy.manual()
    report = SolveReport(method="mstab" if recycle is not None else "idrstab", s=s, ell=ell)
    record = _Recorder(report)
    fp = fingerprint(op)

    r = b - op.matvec(x)
    report.extra_mv += 1
    bnorm = np.linalg.norm(b)
    target = cfg.tol * bnorm

    if recycle is not None:
        if recycle.s != s:
            raise ValueError(f"recycle data has s={recycle.s}, config has s={s}")
        if recycle.n != n:
            raise ValueError(f"recycle data has N={recycle.n}, matrix has N={n}")
        P, U, V = recycle.P.copy(), recycle.U.copy(), recycle.V.copy()
        J = recycle.level
        omegas = list(recycle.omega_history)
    else:
        P = generate_cut_space(n, s, cfg.seed, _is_real_problem(op, b))
        J = 0
        omegas = []
        if np.linalg.norm(r) > target:
            U, V = arnoldi_init(counter, r, s, np.random.default_rng(cfg.seed + 1))
        else:
            U = V = np.zeros((n, s), dtype=np.complex128)
    report.start_level = report.level = J

    def h_rd(levels):
        return levels * s + (J * (s - 1) if recycle is not None else 0)

    fetched = None
    rnorm = np.linalg.norm(r)
    record(0, counter.count, J, rnorm)
    report.status = Status.CONVERGED
    while rnorm > target:
        stop = cfg.budget_left(counter.count, report.cycles)
        if stop is not None:
            report.status = stop
            break
        state = IterationState.start(x, r, U, V, ell, report.level)
        try:
            for k in range(ell):
                level_iteration(state, counter, P, k)
            x, r, U, V, tau = poly_combination(state, ell)
        except RankDeficient as exc:
            if np.linalg.norm(state.r_levels[0]) <= target:
                # exact solution reached inside the cycle; nothing left to minimise
                x, r = state.x0, state.r_levels[0].copy()
                tau = np.zeros(ell, dtype=np.complex128)
            else:
                report.status, report.message = Status.BREAKDOWN, str(exc)
                break
        except BreakdownError as exc:
            report.status, report.message = Status.BREAKDOWN, str(exc)
            break
        report.cycles += 1
        report.level += ell
        report.omega_history.append(tau)
        omegas.extend(omegas_from_tau(tau) if np.any(tau) else np.zeros(ell))
        if cfg.true_residual_each_cycle:
            r = b - op.matvec(x)
            report.extra_mv += 1
        rnorm = np.linalg.norm(r)
        record(report.cycles, counter.count, report.level, rnorm)
        snap = CycleSnapshot(x, r, U, V)
        if fetched is None and fetch_policy.triggers(report.cycles, rnorm, bnorm, cfg.tol):
            fetched = fetch(snap, P, omegas, report.level, fp)
            report.fetched_at = report.cycles
        if callback is not None:
            callback(report.cycles, snap)

    report.h_mv = counter.count
    report.h_rd = h_rd(report.level - J)
    record.finish()
    out = fetched if fetched is not None else fetch(CycleSnapshot(x, r, U, V), P, omegas,
                                                     report.level, fp)
    return x, report, out


def mstab_solve(A, b, recycle: RecycleData, x0=None, cfg: SolverConfig | None = None,
                fetch_policy: FetchPolicy | None = None, callback=None):
    """M(s,ell)stab: :func:`idrstab_solve` driven by recycled ``(P, U, V)``.

    ``cfg.s`` is taken from the recycle data when no config is given.
    """
    if recycle is None:
        raise ValueError("mstab_solve requires recycle data")
    if cfg is None:
        cfg = SolverConfig(s=recycle.s)
    return idrstab_solve(A, b, x0, cfg, recycle, fetch_policy, callback)
