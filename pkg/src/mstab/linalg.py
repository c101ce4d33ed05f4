"""
Dense and sparse kernels over complex double precision.

Dense blocks and vectors are plain ``numpy`` arrays of dtype ``complex128``;
the only custom container is :class:`CsrMatrix`, the sparse operator that is
multiplied repeatedly by the solvers.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import DimensionMismatch, RankDeficient, SingularProjection

__all__ = [
    "CsrMatrix",
    "DenseOperator",
    "as_operator",
    "as_vector",
    "tridiag",
    "spmv",
    "least_squares_tall",
    "solve_small",
    "lu_solve_checked",
    "orthonormalize",
    "RANK_TOL",
]

#: Default relative rank tolerance of :func:`orthonormalize`.
RANK_TOL = 1e-10


def as_vector(x, n=None):
    """Return ``x`` as a fresh 1-D complex128 array, checking finiteness."""
    v = np.array(x, dtype=np.complex128).reshape(-1)
    if n is not None and v.shape[0] != n:
        raise DimensionMismatch(f"expected vector of length {n}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains NaN or Inf")
    return v


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Compressed sparse row matrix with complex values.

    Column indices must be strictly increasing within each row. Use
    :meth:`from_coo` to build from unsorted triplets (duplicates are summed).
    """

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    _scipy: scipy.sparse.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        col_idx = np.ascontiguousarray(self.col_idx, dtype=np.int64)
        values = np.ascontiguousarray(self.values, dtype=np.complex128)
        object.__setattr__(self, "row_ptr", row_ptr)
        object.__setattr__(self, "col_idx", col_idx)
        object.__setattr__(self, "values", values)
        self._check()
        for arr in (row_ptr, col_idx, values):
            arr.flags.writeable = False
        mat = scipy.sparse.csr_matrix(
            (values, col_idx, row_ptr), shape=(self.n_rows, self.n_cols), copy=False
        )
        object.__setattr__(self, "_scipy", mat)

    def _check(self):
        rp, ci = self.row_ptr, self.col_idx
        if rp.ndim != 1 or rp.shape[0] != self.n_rows + 1:
            raise ValueError("row_ptr must have length n_rows + 1")
        if rp[0] != 0 or np.any(np.diff(rp) < 0):
            raise ValueError("row_ptr must start at 0 and be nondecreasing")
        if rp[-1] != self.values.shape[0] or ci.shape[0] != self.values.shape[0]:
            raise ValueError("row_ptr[n_rows] must equal len(values) == len(col_idx)")
        if ci.size and (ci.min() < 0 or ci.max() >= self.n_cols):
            raise ValueError("column index out of range")
        # strictly increasing inside rows: a non-increase is only allowed at row starts
        if ci.size > 1:
            bad = np.flatnonzero(np.diff(ci) <= 0) + 1
            starts = set(rp[1:-1].tolist())
            if any(int(k) not in starts for k in bad):
                raise ValueError("column indices must be strictly increasing within each row")

    # construction helpers -------------------------------------------------

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, vals):
        m = scipy.sparse.coo_matrix(
            (np.asarray(vals, dtype=np.complex128), (np.asarray(rows), np.asarray(cols))),
            shape=(n_rows, n_cols),
        ).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return cls(n_rows, n_cols, m.indptr, m.indices, m.data)

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a)
        rows, cols = np.nonzero(a)
        return cls.from_coo(a.shape[0], a.shape[1], rows, cols, a[rows, cols])

    @classmethod
    def from_scipy(cls, m):
        m = scipy.sparse.csr_matrix(m, dtype=np.complex128, copy=True)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    # operator protocol ----------------------------------------------------

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return int(self.values.shape[0])

    @property
    def is_real(self):
        return bool(np.all(self.values.imag == 0))

    def matvec(self, x):
        return spmv(self, x)

    def rmatvec(self, x):
        """Product with the conjugate transpose."""
        x = np.asarray(x)
        if x.shape[0] != self.n_rows:
            raise DimensionMismatch(f"A^H is {self.n_cols}x{self.n_rows}, x has {x.shape[0]}")
        return np.asarray(self._scipy.conj().T @ x, dtype=np.complex128)

    def __matmul__(self, x):
        return self.matvec(x)

    def diagonal(self):
        return self._scipy.diagonal()

    def to_scipy(self):
        return self._scipy.copy()

    def toarray(self):
        return self._scipy.toarray()

    def fingerprint(self):
        """SHA-256 over the shape, nnz and the raw CSR arrays."""
        h = hashlib.sha256()
        h.update(np.array([self.n_rows, self.n_cols, self.nnz], dtype="<i8").tobytes())
        h.update(self.row_ptr.astype("<i8").tobytes())
        h.update(self.col_idx.astype("<i8").tobytes())
        h.update(self.values.astype("<c16").tobytes())
        return h.hexdigest()


class DenseOperator:
    """Operator wrapper around a dense 2-D array."""

    def __init__(self, a):
        self.array = np.array(a, dtype=np.complex128)
        if self.array.ndim != 2:
            raise ValueError("dense operator must be 2-D")
        self.shape = self.array.shape

    @property
    def is_real(self):
        return bool(np.all(self.array.imag == 0))

    def matvec(self, x):
        x = np.asarray(x)
        if x.shape[0] != self.shape[1]:
            raise DimensionMismatch(f"operator is {self.shape}, x has length {x.shape[0]}")
        return self.array @ x

    def rmatvec(self, x):
        return self.array.conj().T @ np.asarray(x)

    def fingerprint(self):
        h = hashlib.sha256()
        h.update(np.array(self.shape, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.array).astype("<c16").tobytes())
        return h.hexdigest()


def as_operator(a):
    """Coerce ``a`` to something with ``shape``, ``matvec`` and ``rmatvec``.

    Dense arrays become :class:`DenseOperator`, scipy sparse matrices become
    :class:`CsrMatrix`; anything already providing ``matvec`` is returned
    unchanged.
    """
    if hasattr(a, "matvec") and hasattr(a, "shape"):
        return a
    if scipy.sparse.issparse(a):
        return CsrMatrix.from_scipy(a)
    return DenseOperator(a)


def tridiag(a, b, c, n):
    """``n x n`` tridiagonal matrix with ``a`` below, ``b`` on and ``c`` above the diagonal."""
    rows, cols, vals = [], [], []
    for i in range(n):
        if i > 0:
            rows.append(i); cols.append(i - 1); vals.append(a)
        rows.append(i); cols.append(i); vals.append(b)
        if i < n - 1:
            rows.append(i); cols.append(i + 1); vals.append(c)
    return CsrMatrix.from_coo(n, n, rows, cols, vals)


def spmv(A: CsrMatrix, x) -> np.ndarray:
    """Sparse matrix-vector product ``A @ x``."""
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] != A.n_cols:
        raise DimensionMismatch(f"A has {A.n_cols} columns, x has shape {x.shape}")
    return np.asarray(A._scipy @ x, dtype=np.complex128)


def least_squares_tall(Z, r) -> np.ndarray:
    """Minimise ``||r - Z tau||_2`` through a Householder QR of ``Z``.

    Raises
    ------
    RankDeficient
        If ``min |R_ii| < 1e-13 * max |R_ii|``.
    """
    Z = np.asarray(Z, dtype=np.complex128)
    r = np.asarray(r, dtype=np.complex128)
    if Z.ndim != 2 or Z.shape[0] < Z.shape[1] or Z.shape[1] < 1:
        raise DimensionMismatch(f"need a tall N x l matrix with l >= 1, got {Z.shape}")
    if r.shape[0] != Z.shape[0]:
        raise DimensionMismatch("right-hand side length does not match Z")
    Q, R = np.linalg.qr(Z, mode="reduced")
    d = np.abs(np.diag(R))
    if d.max() == 0.0 or d.min() < 1e-13 * d.max():
        raise RankDeficient(f"column rank lost: |R_ii| in [{d.min():.3e}, {d.max():.3e}]")
    return scipy.linalg.solve_triangular(R, Q.conj().T @ r, lower=False)


def lu_solve_checked(M, rhs, rel_pivot_tol=1e-14, exc=SingularProjection):
    """Gaussian elimination with partial pivoting; ``rhs`` may be a vector or a block.

    Raises ``exc`` when a pivot magnitude drops below ``rel_pivot_tol * max|M|``.
    """
    M = np.array(M, dtype=np.complex128)
    n = M.shape[0]
    if M.ndim != 2 or M.shape[1] != n:
        raise DimensionMismatch(f"square matrix required, got {M.shape}")
    x = np.array(rhs, dtype=np.complex128)
    if x.shape[0] != n:
        raise DimensionMismatch("right-hand side length does not match matrix")
    scale = np.abs(M).max() if M.size else 0.0
    if scale == 0.0:
        raise exc("matrix is zero")
    thresh = rel_pivot_tol * scale
    for k in range(n):
        p = k + int(np.argmax(np.abs(M[k:, k])))
        if abs(M[p, k]) < thresh:
            raise exc(f"pivot {abs(M[p, k]):.3e} below {thresh:.3e} in column {k}")
        if p != k:
            M[[k, p]] = M[[p, k]]
            x[[k, p]] = x[[p, k]]
        f = M[k + 1:, k] / M[k, k]
        M[k + 1:, k:] -= np.outer(f, M[k, k:])
        x[k + 1:] -= np.multiply.outer(f, x[k]) if x.ndim > 1 else f * x[k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - M[k, k + 1:] @ x[k + 1:]) / M[k, k]
    return x


def solve_small(M, rhs) -> np.ndarray:
    """Solve the small ``s x s`` projected system ``M x = rhs``.

    Raises :class:`SingularProjection` for a pivot below ``1e-14 max|M|``.
    """
    return lu_solve_checked(M, rhs, 1e-14, SingularProjection)


def orthonormalize(V, tol=RANK_TOL):
    """Rank-revealing classical Gram-Schmidt with one reorthogonalisation.

    Columns whose component orthogonal to the already accepted columns has
    norm ``<= tol * ||original column||`` are dropped.

    Returns
    -------
    Q : ndarray, shape (N, rank)
    rank : int
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    V = np.asarray(V, dtype=np.complex128)
    if V.ndim == 1:
        V = V[:, None]
    n, m = V.shape
    Q = np.empty((n, min(n, m)), dtype=np.complex128)
    k = 0
    for j in range(m):
        v = V[:, j].copy()
        nrm0 = np.linalg.norm(v)
        if nrm0 == 0.0 or k == n:
            continue
        for _ in range(2):
            if k:
                v -= Q[:, :k] @ (Q[:, :k].conj().T @ v)
        nrm = np.linalg.norm(v)
        if nrm <= tol * nrm0:
            continue
        Q[:, k] = v / nrm
        k += 1
    return Q[:, :k].copy(), k
