"""
Split preconditioning ``L^{-1} A R^{-1} x~ = L^{-1} b`` with ``x = R^{-1} x~``.

``kind="ilu0"`` is the zero fill-in incomplete LU in Doolittle form (unit lower
``L``, upper ``R`` carrying the pivots); ``kind="jacobi"`` puts ``sqrt(diag A)``
into both factors; ``kind="none"`` uses identities.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.sparse
from scipy.sparse.linalg import spsolve_triangular

from .errors import ZeroPivot
from .linalg import CsrMatrix, as_operator

__all__ = [
    "SplitPreconditioner",
    "PreconditionedOperator",
    "build_preconditioner",
    "build_ilu0",
    "build_jacobi",
    "identity_preconditioner",
    "apply_preconditioned",
    "preconditioned_rhs",
    "unpreconditioned_solution",
]


@dataclass(frozen=True, eq=False)
class SplitPreconditioner:
    L_factor: CsrMatrix
    R_factor: CsrMatrix
    kind: str

    @property
    def n(self):
        return self.L_factor.n_rows

    def solve_L(self, x):
        if self.kind == "none":
            return np.array(x, dtype=np.complex128)
        return _tri_solve(self.L_factor, x, lower=True, unit=self.kind == "ilu0")

    def solve_R(self, x):
        if self.kind == "none":
            return np.array(x, dtype=np.complex128)
        return _tri_solve(self.R_factor, x, lower=False, unit=False)

    def solve_LH(self, x):
        if self.kind == "none":
            return np.array(x, dtype=np.complex128)
        return _tri_solve(self.L_factor, x, lower=True, unit=self.kind == "ilu0", adjoint=True)

    def solve_RH(self, x):
        if self.kind == "none":
            return np.array(x, dtype=np.complex128)
        return _tri_solve(self.R_factor, x, lower=False, unit=False, adjoint=True)

    def fingerprint(self):
        h = hashlib.sha256(self.kind.encode())
        h.update(self.L_factor.fingerprint().encode())
        h.update(self.R_factor.fingerprint().encode())
        return h.hexdigest()


def _tri_solve(T: CsrMatrix, x, lower, unit, adjoint=False):
    m = T._scipy
    if adjoint:
        m, lower = m.conj().T.tocsr(), not lower
    x = np.asarray(x, dtype=np.complex128)
    return spsolve_triangular(m, x, lower=lower, unit_diagonal=unit)


def identity_preconditioner(n) -> SplitPreconditioner:
    eye = CsrMatrix.from_scipy(scipy.sparse.identity(n, format="csr"))
    return SplitPreconditioner(eye, eye, "none")


def build_jacobi(A: CsrMatrix) -> SplitPreconditioner:
    d = A.diagonal()
    bad = np.flatnonzero(d == 0)
    if bad.size:
        raise ZeroPivot(int(bad[0]))
    root = np.sqrt(d.astype(np.complex128))
    D = CsrMatrix.from_scipy(scipy.sparse.diags(root, format="csr"))
    return SplitPreconditioner(D, D, "jacobi")


def build_ilu0(A: CsrMatrix) -> SplitPreconditioner:
    """Zero fill-in incomplete LU (IKJ variant) on the sparsity pattern of ``A``.

    Raises :class:`ZeroPivot` if a diagonal entry is missing or becomes zero.
    """
    n = A.n_rows
    rp, ci = A.row_ptr, A.col_idx
    a = A.values.copy()
    diag = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        hit = np.flatnonzero(ci[rp[i]:rp[i + 1]] == i)
        if hit.size == 0:
            raise ZeroPivot(i)
        diag[i] = rp[i] + hit[0]
    for i in range(n):
        lo, hi = rp[i], rp[i + 1]
        pos = {int(c): p for p, c in zip(range(lo, hi), ci[lo:hi])}
        for p in range(lo, diag[i]):
            k = int(ci[p])
            pivot = a[diag[k]]
            if pivot == 0:
                raise ZeroPivot(k)
            a[p] /= pivot
            lik = a[p]
            for q in range(diag[k] + 1, rp[k + 1]):
                t = pos.get(int(ci[q]))
                if t is not None:
                    a[t] -= lik * a[q]
        if a[diag[i]] == 0:
            raise ZeroPivot(i)
    lower_mask = np.zeros(a.shape[0], dtype=bool)
    upper_mask = np.zeros(a.shape[0], dtype=bool)
    rows = np.repeat(np.arange(n), np.diff(rp))
    lower_mask[ci < rows] = True
    upper_mask[ci >= rows] = True
    L = scipy.sparse.csr_matrix((a[lower_mask], (rows[lower_mask], ci[lower_mask])), shape=(n, n))
    L = L + scipy.sparse.identity(n, format="csr")
    R = scipy.sparse.csr_matrix((a[upper_mask], (rows[upper_mask], ci[upper_mask])), shape=(n, n))
    return SplitPreconditioner(CsrMatrix.from_scipy(L), CsrMatrix.from_scipy(R), "ilu0")


def build_preconditioner(A: CsrMatrix, kind="none") -> SplitPreconditioner:
    if kind in (None, "none"):
        return identity_preconditioner(A.n_rows)
    if kind == "jacobi":
        return build_jacobi(A)
    if kind == "ilu0":
        return build_ilu0(A)
    raise ValueError(f"unknown preconditioner {kind!r}")


class PreconditionedOperator:
    """``x -> L^{-1} A R^{-1} x``; one application counts as one product with ``A``."""

    def __init__(self, A, pc: SplitPreconditioner):
        self.A = as_operator(A)
        self.pc = pc
        self.shape = self.A.shape

    @property
    def is_real(self):
        return bool(getattr(self.A, "is_real", False)
                    and self.pc.L_factor.is_real and self.pc.R_factor.is_real)

    def matvec(self, x):
        return apply_preconditioned(self.pc, self.A, x)

    def rmatvec(self, x):
        return self.pc.solve_RH(self.A.rmatvec(self.pc.solve_LH(x)))

    def fingerprint(self):
        h = hashlib.sha256(self.A.fingerprint().encode())
        h.update(self.pc.fingerprint().encode())
        return h.hexdigest()


def apply_preconditioned(pc: SplitPreconditioner, A, x):
    """``L^{-1} (A (R^{-1} x))``."""
    return pc.solve_L(A.matvec(pc.solve_R(x)))


def preconditioned_rhs(pc: SplitPreconditioner, b):
    return pc.solve_L(b)


def unpreconditioned_solution(pc: SplitPreconditioner, x_tilde):
    """Map a solution of the split system back: ``x = R^{-1} x~``."""
    return pc.solve_R(x_tilde)
