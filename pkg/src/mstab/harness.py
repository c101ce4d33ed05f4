"""
Experiment driver: build the operator, generate right-hand sides, solve them
one after the other, hand recycling data from solve to solve, and write CSV
logs.
"""
from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, StaleData
from .linalg import CsrMatrix, tridiag
from .mmio import read_matrix_market
from .precond import PreconditionedOperator, build_preconditioner, preconditioned_rhs, \
    unpreconditioned_solution
from .recycle import FetchPolicy, RecycleData, load, save, validate
from .solvers import (SolverConfig, Status, bicg_solve, bicgstab_solve, gmres_solve,
                      idrstab_solve, mstab_solve, sridr_solve)

__all__ = ["ExperimentConfig", "make_rhs", "build_matrix", "run_sequence", "emit_csv",
           "emit_summary", "METHODS"]

log = logging.getLogger(__name__)

METHODS = ("gmres", "bicg", "bicgstab", "idr", "idrstab", "mstab", "sridr")
CSV_HEADER = ("cycle", "mv", "level", "resnorm", "wall_ns")
SUMMARY_HEADER = ("rhs", "method", "s", "ell", "h_mv", "h_rd", "extra_mv", "cycles", "level",
                  "status", "resnorm", "true_relres", "wall_time")


@dataclass
class ExperimentConfig:
    """One sequence of solves with a fixed matrix.

    Exactly one of ``matrix_path`` and ``tridiag`` (``(a, b, c, N)``) selects
    the matrix. ``rhs`` entries are ``"ones"``, ``"sinewave"``,
    ``"random:SEED"`` or a path to a text file with one value per line.
    """

    matrix_path: str | None = None
    tridiag: tuple | None = None
    rhs: list = field(default_factory=lambda: ["ones"])
    method: str = "idrstab"
    s: int = 4
    ell: int = 1
    tol: float = 1e-8
    max_mv: int = 10_000
    precond: str = "none"
    fetch: FetchPolicy = field(default_factory=FetchPolicy.manual)
    recycle_in: str | None = None
    recycle_out: str | None = None
    log_path: str | None = None
    seed: int = 0
    true_residual: bool = False

    def check(self):
        if (self.matrix_path is None) == (self.tridiag is None):
            raise ConfigError("give exactly one of a Matrix Market file or a tridiag spec")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if not self.rhs:
            raise ConfigError("at least one right-hand side is required")
        if self.method in ("mstab", "sridr") and self.recycle_in is None and len(self.rhs) < 2:
            raise ConfigError(f"{self.method} needs --recycle-in or a prior solve in the sequence")
        if self.method == "sridr" and self.ell != 1:
            raise ConfigError("sridr requires ell == 1")
        if self.precond not in ("none", "jacobi", "ilu0"):
            raise ConfigError(f"unknown preconditioner {self.precond!r}")
        try:
            self.solver_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def solver_config(self, ell=None):
        return SolverConfig(s=self.s, ell=self.ell if ell is None else ell, tol=self.tol,
                            max_mv=self.max_mv, true_residual_each_cycle=self.true_residual,
                            seed=self.seed)


def make_rhs(spec, n) -> np.ndarray:
    """Right-hand side from a spec string.

    ``ones`` is the all-ones vector, ``sinewave`` has entries
    ``sin(2 pi k / N)`` for ``k = 1..N``, ``random:SEED`` is standard normal.
    Anything else is read as a text file of values.
    """
    if spec == "ones":
        return np.ones(n)
    if spec == "sinewave":
        return np.sin(2 * np.pi / n * np.arange(1, n + 1))
    m = re.fullmatch(r"random(?::(\d+)|\((\d+)\))?", spec)
    if m:
        seed = int(m.group(1) or m.group(2) or 0)
        return np.random.default_rng(seed).standard_normal(n)
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"unknown rhs spec {spec!r}")
    try:
        b = np.loadtxt(path, dtype=float, ndmin=1)
    except ValueError:
        b = np.loadtxt(path, dtype=complex, ndmin=1)
    if b.shape != (n,):
        raise ConfigError(f"rhs file {spec} has {b.size} entries, matrix has N={n}")
    return b


def build_matrix(cfg: ExperimentConfig) -> CsrMatrix:
    if cfg.tridiag is not None:
        a, b, c, n = cfg.tridiag
        return tridiag(a, b, c, int(n))
    return read_matrix_market(cfg.matrix_path)


def emit_csv(report, path) -> None:
    """One row per history point: ``cycle,mv,level,resnorm,wall_ns``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for h in report.residual_history:
            w.writerow([h.cycle, h.mv, h.level, repr(h.resnorm), h.wall_ns])


def emit_summary(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        for i, r in enumerate(reports, start=1):
            w.writerow([i, r.method, r.s, r.ell, r.h_mv, r.h_rd, r.extra_mv, r.cycles, r.level,
                        r.status.value, f"{r.final_residual:.6e}",
                        "" if r.true_relres is None else f"{r.true_relres:.6e}",
                        f"{r.wall_time:.6f}"])


def _load_recycle(path, op) -> RecycleData:
    data = load(path)
    validate(data, op)
    return data


def run_sequence(cfg: ExperimentConfig):
    """Solve all right-hand sides of ``cfg`` in order.

    For ``mstab`` and ``sridr`` the recycling data comes from ``recycle_in``
    or, failing that, from the fetching point of the first solve (an
    IDR(s)stab run); the same data is then reused for every later
    right-hand side. In-sequence data that fails :func:`validate` is dropped
    with a warning and the remaining right-hand sides are solved with
    IDR(s)stab. A breakdown stops the sequence; the reports gathered so
    far are returned (and logged).

    Returns
    -------
    list of SolveReport
        With ``solution`` (in the original, unpreconditioned variables) and
        ``true_relres = ||b - A x|| / ||b||`` filled in.
    """
    cfg.check()
    A = build_matrix(cfg)
    n = A.n_rows
    pc = build_preconditioner(A, cfg.precond)
    op = A if cfg.precond == "none" else PreconditionedOperator(A, pc)
    rhs = [make_rhs(spec, n) for spec in cfg.rhs]

    recycle = _load_recycle(cfg.recycle_in, op) if cfg.recycle_in else None
    logdir = Path(cfg.log_path) if cfg.log_path else None
    if logdir is not None:
        logdir.mkdir(parents=True, exist_ok=True)

    reports = []
    fallback = False
    for idx, b in enumerate(rhs, start=1):
        bt = preconditioned_rhs(pc, b)
        out = None
        if cfg.method == "gmres":
            xt, rep = gmres_solve(op, bt, tol=cfg.tol, max_it=min(cfg.max_mv, n))
        elif cfg.method == "bicg":
            xt, rep = bicg_solve(op, bt, tol=cfg.tol, max_mv=cfg.max_mv)
        elif cfg.method == "bicgstab":
            xt, rep = bicgstab_solve(op, bt, tol=cfg.tol, max_mv=cfg.max_mv)
        elif cfg.method in ("idr", "idrstab"):
            ell = 1 if cfg.method == "idr" else cfg.ell
            xt, rep, out = idrstab_solve(op, bt, cfg=cfg.solver_config(ell),
                                         fetch_policy=cfg.fetch)
        elif fallback:
            xt, rep, _ = idrstab_solve(op, bt, cfg=cfg.solver_config(), fetch_policy=None)
        elif recycle is None:
            # first solve of a recycling sequence produces the data
            ell = 1 if cfg.method == "sridr" else cfg.ell
            xt, rep, out = idrstab_solve(op, bt, cfg=cfg.solver_config(ell),
                                         fetch_policy=cfg.fetch)
            if rep.fetched_at is None:
                log.warning("fetch point not reached in solve %d; recycling its final state", idx)
            try:
                validate(out, op)
                recycle = out
            except StaleData as exc:
                # e.g. the space was exhausted before the fetch: V is rounding noise
                log.warning("recycle data of solve %d unusable (%s); later right-hand sides "
                            "use idrstab", idx, exc)
                fallback = True
        elif cfg.method == "mstab":
            xt, rep, _ = mstab_solve(op, bt, recycle, cfg=cfg.solver_config())
            out = recycle
        else:
            xt, rep = sridr_solve(op, bt, recycle, cfg=cfg.solver_config(1))
            out = recycle
        x = unpreconditioned_solution(pc, xt)
        bn = np.linalg.norm(b)
        rep.solution = x
        rep.true_relres = float(np.linalg.norm(b - A.matvec(x)) / bn) if bn else 0.0
        reports.append(rep)
        log.info("rhs %d: %s %s after %d MVs (true rel. residual %.2e)",
                 idx, rep.method, rep.status.value, rep.h_mv, rep.true_relres)
        if idx == 1 and cfg.recycle_out and out is not None:
            save(out, cfg.recycle_out)
        if logdir is not None:
            emit_csv(rep, logdir / f"rhs{idx:02d}_{rep.method}.csv")
        if rep.status is Status.BREAKDOWN:
            break
    if logdir is not None:
        emit_summary(reports, logdir / "summary.csv")
    return reports
