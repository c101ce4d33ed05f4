"""Configuration, reports and MV bookkeeping shared by all solvers."""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ..linalg import as_operator, as_vector
from ..subspace import omegas_from_tau


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_MV = "max_mv"
    MAX_CYCLES = "max_cycles"
    BREAKDOWN = "breakdown"


@dataclass
class SolverConfig:
    """Parameters of IDR(s)stab(ell), M(s,ell)stab and SRIDR(s).

    ``seed`` only drives the random cut-space ``P`` (and Arnoldi padding).
    ``max_cycles`` optionally stops after that many cycles, in addition to
    the product budget ``max_mv``.
    """

    s: int = 4
    ell: int = 1
    tol: float = 1e-8
    max_mv: int = 10_000
    true_residual_each_cycle: bool = False
    seed: int = 0
    max_cycles: int | None = None

    def __post_init__(self):
        if self.s < 1 or self.ell < 1:
            raise ValueError("s and ell must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_mv < self.s + 1:
            raise ValueError("max_mv must be at least s + 1")
        if self.max_cycles is not None and self.max_cycles < 0:
            raise ValueError("max_cycles must be nonnegative")

    def budget_left(self, mv, cycles):
        """``None`` while another cycle may start, else the status to stop with."""
        if mv >= self.max_mv:
            return Status.MAX_MV
        if self.max_cycles is not None and cycles >= self.max_cycles:
            return Status.MAX_CYCLES
        return None


class HistoryPoint(NamedTuple):
    cycle: int
    mv: int
    level: int
    resnorm: float
    wall_ns: int


@dataclass
class SolveReport:
    """What happened during one solve.

    ``h_mv`` counts the products with ``A`` that the method itself needs
    (cost-table accounting). Products spent on computing the initial residual
    and on true-residual replacement are tallied separately in ``extra_mv``.
    """

    method: str
    s: int = 0
    ell: int = 0
    residual_history: list = field(default_factory=list)
    omega_history: list = field(default_factory=list)
    h_mv: int = 0
    h_rd: int = 0
    extra_mv: int = 0
    cycles: int = 0
    level: int = 0
    start_level: int = 0
    status: Status = Status.MAX_MV
    message: str = ""
    fetched_at: int | None = None
    wall_time: float = 0.0
    solution: np.ndarray | None = field(default=None, repr=False)
    true_relres: float | None = None

    @property
    def converged(self):
        return self.status is Status.CONVERGED

    @property
    def residual_norms(self):
        return np.array([h.resnorm for h in self.residual_history])

    @property
    def final_residual(self):
        return self.residual_history[-1].resnorm

    @property
    def omegas(self):
        """Relaxations of all finished cycles, flattened in level order."""
        if not self.omega_history:
            return np.zeros(0, dtype=np.complex128)
        return np.concatenate([omegas_from_tau(t) for t in self.omega_history])


class CountingOperator:
    """Wraps an operator and counts ``matvec`` calls."""

    def __init__(self, op):
        self.op = op
        self.shape = op.shape
        self.count = 0

    def matvec(self, x):
        self.count += 1
        return self.op.matvec(x)


class _Recorder:
    """Appends history points with wall-clock offsets from construction."""

    def __init__(self, report):
        self.report = report
        self.t0 = time.perf_counter_ns()

    def __call__(self, cycle, mv, level, resnorm):
        self.report.residual_history.append(
            HistoryPoint(cycle, mv, level, float(resnorm), time.perf_counter_ns() - self.t0)
        )

    def finish(self):
        self.report.wall_time = (time.perf_counter_ns() - self.t0) * 1e-9


def prepare(A, b, x0):
    op = as_operator(A)
    n = op.shape[0]
    if op.shape[1] != n:
        raise ValueError("operator must be square")
    b = as_vector(b, n)
    x = np.zeros(n, dtype=np.complex128) if x0 is None else as_vector(x0, n)
    return op, b, x
