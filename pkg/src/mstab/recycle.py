"""
Recycling data: capture at a fetching point, validation, and the ``.mrd``
file format.

``.mrd`` layout (all integers and floats little-endian)::

    offset  size  field
    0       8     magic  b"MSTABRD\\0"
    8       4     version (uint32, currently 1)
    12      4     flags   (uint32, bit 0 set: complex payload)
    16      8     N       (uint64)
    24      8     s       (uint64)
    32      8     J       (uint64, level of the recycled space)
    40      8     n_omega (uint64)
    48      32    SHA-256 matrix fingerprint (raw digest)
    80      ...   P, U, V  as N x s column-major blocks, then the omegas

Real payloads store one float64 per scalar, complex payloads store
``(re, im)`` float64 pairs.
"""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import FingerprintMismatch, RecycleFormatError, StaleData
from .linalg import as_operator

__all__ = [
    "RecycleData",
    "FetchPolicy",
    "CycleSnapshot",
    "RecycleWarning",
    "ValidationReport",
    "fingerprint",
    "fetch",
    "validate",
    "save",
    "load",
]

MAGIC = b"MSTABRD\x00"
VERSION = 1
_HEADER = struct.Struct("<8sIIQQQQ32s")


class RecycleWarning(UserWarning):
    pass


def fingerprint(A) -> str:
    return as_operator(A).fingerprint()


@dataclass(frozen=True, eq=False)
class RecycleData:
    """``(P, U, V)`` with ``V = A U`` plus the relaxations that led to level ``level``."""

    P: np.ndarray
    U: np.ndarray
    V: np.ndarray
    omega_history: np.ndarray
    level: int
    matrix_fingerprint: str

    def __post_init__(self):
        for name in ("P", "U", "V"):
            a = np.array(getattr(self, name), dtype=np.complex128)
            if a.ndim != 2:
                raise ValueError(f"{name} must be 2-D")
            a.flags.writeable = False
            object.__setattr__(self, name, a)
        if not (self.P.shape == self.U.shape == self.V.shape):
            raise ValueError("P, U and V must have identical shapes")
        om = np.array(self.omega_history, dtype=np.complex128).reshape(-1)
        om.flags.writeable = False
        object.__setattr__(self, "omega_history", om)
        if self.level < 0:
            raise ValueError("level must be nonnegative")

    @property
    def s(self) -> int:
        return self.P.shape[1]

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def equals(self, other) -> bool:
        """Bit-exact comparison of every field."""
        return (
            self.level == other.level
            and self.matrix_fingerprint == other.matrix_fingerprint
            and all(
                a.shape == b.shape and a.tobytes() == b.tobytes()
                for a, b in zip(
                    (self.P, self.U, self.V, self.omega_history),
                    (other.P, other.U, other.V, other.omega_history),
                )
            )
        )


@dataclass(frozen=True)
class FetchPolicy:
    """When a solver should capture recycling data.

    ``kind`` is ``"cycle"`` (after cycle ``cycle``), ``"half-tol"`` (first
    cycle with ``||r|| <= sqrt(tol) ||b||``) or ``"manual"`` (never
    automatically).
    """

    kind: str = "manual"
    cycle: int | None = None

    def __post_init__(self):
        if self.kind not in ("cycle", "half-tol", "manual"):
            raise ValueError(f"unknown fetch policy {self.kind!r}")
        if self.kind == "cycle" and (self.cycle is None or self.cycle < 1):
            raise ValueError("AtCycle fetch requires cycle >= 1")

    @classmethod
    def at_cycle(cls, k):
        return cls("cycle", int(k))

    @classmethod
    def half_tolerance(cls):
        return cls("half-tol")

    @classmethod
    def manual(cls):
        return cls("manual")

    @classmethod
    def parse(cls, text):
        """Parse ``cycle:K``, ``half-tol`` or ``off``."""
        if text in (None, "off", "manual"):
            return cls.manual()
        if text == "half-tol":
            return cls.half_tolerance()
        if text.startswith("cycle:"):
            return cls.at_cycle(int(text.split(":", 1)[1]))
        raise ValueError(f"cannot parse fetch policy {text!r}")

    def triggers(self, cycle, resnorm, bnorm, tol) -> bool:
        if self.kind == "cycle":
            return cycle == self.cycle
        if self.kind == "half-tol":
            return resnorm <= np.sqrt(tol) * bnorm
        return False


class CycleSnapshot(NamedTuple):
    """Solver state right after a residual-minimisation step."""

    x: np.ndarray
    r: np.ndarray
    U: np.ndarray
    V: np.ndarray


def fetch(snapshot: CycleSnapshot, P, omega_history, level, A) -> RecycleData:
    """Deep-copy ``(P, U, V)`` out of a snapshot taken after a cycle."""
    return RecycleData(
        P=np.array(P, copy=True),
        U=np.array(snapshot.U, copy=True),
        V=np.array(snapshot.V, copy=True),
        omega_history=np.array(omega_history, dtype=np.complex128, copy=True),
        level=int(level),
        matrix_fingerprint=A if isinstance(A, str) else fingerprint(A),
    )


class ValidationReport(NamedTuple):
    max_deviation: float       # max_q ||v_q - A u_q|| / ||A u_q||
    p_orthonormality: float    # ||P^H P - I||_max
    v_conditioning: float      # sigma_min(V) / sigma_max(V)


def validate(data: RecycleData, A, tol=1e-6) -> ValidationReport:
    """Check that ``data`` belongs to ``A`` and still satisfies ``V = A U``.

    Costs ``s`` products with ``A``. Warns with :class:`RecycleWarning` when
    ``V`` is numerically rank deficient, i.e. the data was fetched from an
    (almost) empty space.
    """
    op = as_operator(A)
    if op.shape[0] != data.n:
        raise FingerprintMismatch(f"matrix has N={op.shape[0]}, data has N={data.n}")
    if fingerprint(op) != data.matrix_fingerprint:
        raise FingerprintMismatch("recycle data was produced for a different matrix")
    AU = np.column_stack([op.matvec(data.U[:, q]) for q in range(data.s)])
    scale = np.maximum(np.linalg.norm(AU, axis=0), np.finfo(float).tiny)
    dev = float(np.max(np.linalg.norm(data.V - AU, axis=0) / scale))
    porth = float(np.abs(data.P.conj().T @ data.P - np.eye(data.s)).max())
    sv = np.linalg.svd(data.V, compute_uv=False)
    cond = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
    if dev > tol:
        raise StaleData(f"V deviates from A U by {dev:.3e} (relative)")
    if porth > tol:
        raise StaleData(f"P lost orthonormality ({porth:.3e})")
    if cond < 1e-10:
        warnings.warn(
            f"V is numerically rank deficient (sigma ratio {cond:.1e}); "
            "the recycled space is (nearly) empty",
            RecycleWarning,
            stacklevel=2,
        )
    return ValidationReport(dev, porth, cond)


def _is_real(*arrays):
    return all(np.all(a.imag == 0) and not np.any(np.signbit(a.imag)) for a in arrays)


def save(data: RecycleData, path) -> None:
    arrays = (data.P, data.U, data.V, data.omega_history)
    complex_payload = not _is_real(*arrays)
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        1 if complex_payload else 0,
        data.n,
        data.s,
        data.level,
        data.omega_history.size,
        bytes.fromhex(data.matrix_fingerprint),
    )
    dtype = "<c16" if complex_payload else "<f8"
    with open(path, "wb") as fh:
        fh.write(header)
        for a in arrays[:3]:
            fh.write(np.asfortranarray(a if complex_payload else a.real).astype(dtype).tobytes(order="F"))
        om = data.omega_history if complex_payload else data.omega_history.real
        fh.write(om.astype(dtype).tobytes())


def load(path) -> RecycleData:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise RecycleFormatError("file too short for header")
    magic, version, flags, n, s, level, n_om, fp = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise RecycleFormatError("bad magic, not an .mrd file")
    if version != VERSION:
        raise RecycleFormatError(f"unsupported .mrd version {version}")
    if flags & ~1:
        raise RecycleFormatError(f"unknown flags {flags:#x}")
    dtype = np.dtype("<c16" if flags & 1 else "<f8")
    count = 3 * n * s + n_om
    expected = _HEADER.size + count * dtype.itemsize
    if len(raw) != expected:
        raise RecycleFormatError(f"payload size {len(raw)} bytes, expected {expected}")
    payload = np.frombuffer(raw, dtype=dtype, offset=_HEADER.size).astype(np.complex128)
    blocks = [payload[k * n * s:(k + 1) * n * s].reshape((n, s), order="F") for k in range(3)]
    return RecycleData(
        P=blocks[0],
        U=blocks[1],
        V=blocks[2],
        omega_history=payload[3 * n * s:],
        level=int(level),
        matrix_fingerprint=fp.hex(),
    )
