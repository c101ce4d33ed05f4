"""Matrix Market coordinate files <-> :class:`CsrMatrix`."""
from __future__ import annotations

import numpy as np

from .errors import MatrixMarketError
from .linalg import CsrMatrix

__all__ = ["read_matrix_market", "write_matrix_market"]

_FIELDS = ("real", "double", "integer", "complex", "pattern")
_SYMMETRIES = ("general", "symmetric", "skew-symmetric", "hermitian")


def read_matrix_market(path) -> CsrMatrix:
    """Read a coordinate Matrix Market file.

    Symmetric, skew-symmetric and Hermitian storage is expanded to the full
    matrix. Duplicate entries are summed.
    """
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    head = lines[0].split()
    if len(head) != 5 or head[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("missing %%MatrixMarket banner", 1)
    obj, fmt, field, sym = (h.lower() for h in head[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r}", 1)
    if fmt != "coordinate":
        raise MatrixMarketError(f"only coordinate format is supported, got {fmt!r}", 1)
    if field not in _FIELDS:
        raise MatrixMarketError(f"unsupported field {field!r}", 1)
    if sym not in _SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry {sym!r}", 1)

    lineno = 1
    body = iter(enumerate(lines[1:], start=2))
    size = None
    for lineno, line in body:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        size = s.split()
        break
    if size is None:
        raise MatrixMarketError("missing size line", lineno + 1)
    try:
        n_rows, n_cols, nnz = (int(t) for t in size)
    except ValueError:
        raise MatrixMarketError(f"bad size line {' '.join(size)!r}", lineno) from None

    ncols_expected = {"pattern": 2, "complex": 4}.get(field, 3)
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.complex128)
    k = 0
    for lineno, line in body:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        if k >= nnz:
            raise MatrixMarketError(f"more than the declared {nnz} entries", lineno)
        tok = s.split()
        if len(tok) != ncols_expected:
            raise MatrixMarketError(f"expected {ncols_expected} fields, got {len(tok)}", lineno)
        try:
            i, j = int(tok[0]), int(tok[1])
            if field == "pattern":
                v = 1.0
            elif field == "complex":
                v = complex(float(tok[2]), float(tok[3]))
            else:
                v = float(tok[2])
        except ValueError:
            raise MatrixMarketError(f"cannot parse entry {s!r}", lineno) from None
        if not (1 <= i <= n_rows and 1 <= j <= n_cols):
            raise MatrixMarketError(f"index ({i}, {j}) out of range", lineno)
        rows[k], cols[k], vals[k] = i - 1, j - 1, v
        k += 1
    if k != nnz:
        raise MatrixMarketError(f"declared {nnz} entries, found {k}", lineno)

    if sym != "general":
        off = rows != cols
        mirror = vals[off]
        if sym == "skew-symmetric":
            mirror = -mirror
        elif sym == "hermitian":
            mirror = np.conj(mirror)
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, mirror]))
    return CsrMatrix.from_coo(n_rows, n_cols, rows, cols, vals)


def write_matrix_market(A: CsrMatrix, path, comment=None) -> None:
    """Write ``A`` as a general coordinate file (``real`` when all values are real)."""
    real = A.is_real
    rows = np.repeat(np.arange(A.n_rows), np.diff(A.row_ptr))
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {'real' if real else 'complex'} general\n")
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{A.n_rows} {A.n_cols} {A.nnz}\n")
        for i, j, v in zip(rows, A.col_idx, A.values):
            if real:
                fh.write(f"{i + 1} {j + 1} {float(v.real)!r}\n")
            else:
                fh.write(f"{i + 1} {j + 1} {float(v.real)!r} {float(v.imag)!r}\n")
