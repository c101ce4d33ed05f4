"""
Brute-force dense construction of Krylov blocks, Sonneveld spaces, their test
spaces and M-spaces.

Everything here is deliberately naive: small dense matrices (``N <= 64``),
orthonormal bases recomputed at every step, one rank tolerance. It serves as
ground truth for the iterative solvers, not as a building block for them.

A subspace of C^N is a :class:`SubspaceBasis`. Relaxations ``omega_1, ...``
are passed as plain sequences; ``omegas[0]`` is ``omega_1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ShiftSingular
from .linalg import RANK_TOL, lu_solve_checked, orthonormalize

__all__ = [
    "SubspaceBasis",
    "span",
    "full_space",
    "zero_space",
    "krylov_block",
    "subspace_sum",
    "subspace_intersect",
    "subspace_perp",
    "apply_shifted",
    "apply_shifted_inverse",
    "sonneveld_recursive",
    "sonneveld_direct",
    "sonneveld_from_level",
    "test_space",
    "mspace_recursive",
    "mspace_sequence",
    "is_subspace",
    "distance_to",
    "principal_angles",
    "same_subspace",
    "omegas_from_tau",
]


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal basis ``basis`` (N x dim) of a subspace of C^N."""

    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def is_zero(self) -> bool:
        return self.dim == 0

    def projector(self):
        return self.basis @ self.basis.conj().T

    def __repr__(self):
        return f"SubspaceBasis(dim={self.dim}, ambient={self.ambient})"


def span(vectors, tol=RANK_TOL) -> SubspaceBasis:
    """Subspace spanned by the columns of ``vectors`` (a 1-D array is one column)."""
    Q, _ = orthonormalize(np.asarray(vectors, dtype=np.complex128), tol)
    return SubspaceBasis(Q)


def full_space(n) -> SubspaceBasis:
    return SubspaceBasis(np.eye(n, dtype=np.complex128))


def zero_space(n) -> SubspaceBasis:
    return SubspaceBasis(np.zeros((n, 0), dtype=np.complex128))


def _dense(A):
    if hasattr(A, "toarray"):
        A = A.toarray()
    elif hasattr(A, "array"):
        A = A.array
    return np.asarray(A, dtype=np.complex128)


def krylov_block(A, T: SubspaceBasis, j: int, tol=RANK_TOL) -> SubspaceBasis:
    """``span{A^k T : k = 0..j-1}``, built block by block (block Arnoldi)."""
    A = _dense(A)
    n = T.ambient
    if j <= 0 or T.is_zero:
        return zero_space(n)
    Q = T.basis.copy()
    new = Q
    for _ in range(1, j):
        if new.shape[1] == 0 or Q.shape[1] == n:
            break
        # accepted columns of Q are orthonormal and survive unchanged
        Q2, _ = orthonormalize(np.hstack([Q, A @ new]), tol)
        new = Q2[:, Q.shape[1]:]
        Q = Q2
    return SubspaceBasis(Q)


def subspace_sum(S1: SubspaceBasis, S2: SubspaceBasis, tol=RANK_TOL) -> SubspaceBasis:
    if S1.ambient != S2.ambient:
        raise ValueError("subspaces live in different ambient spaces")
    return span(np.hstack([S1.basis, S2.basis]), tol)


def subspace_perp(S: SubspaceBasis, tol=RANK_TOL) -> SubspaceBasis:
    """Orthogonal complement, obtained by orthonormalizing ``[B, I]``."""
    n = S.ambient
    Q, _ = orthonormalize(np.hstack([S.basis, np.eye(n)]), tol)
    return SubspaceBasis(Q[:, S.dim:].copy())


def subspace_intersect(S1: SubspaceBasis, S2: SubspaceBasis, tol=RANK_TOL) -> SubspaceBasis:
    """``S1 ∩ S2 = (S1^⊥ + S2^⊥)^⊥``."""
    if S1.ambient != S2.ambient:
        raise ValueError("subspaces live in different ambient spaces")
    if S1.is_zero or S2.is_zero:
        return zero_space(S1.ambient)
    return subspace_perp(subspace_sum(subspace_perp(S1, tol), subspace_perp(S2, tol), tol), tol)


def apply_shifted(A, omega, S: SubspaceBasis, tol=RANK_TOL) -> SubspaceBasis:
    """``(I - omega A) S``."""
    if omega == 0:
        raise ValueError("omega must be nonzero")
    A = _dense(A)
    return span(S.basis - omega * (A @ S.basis), tol)


def apply_shifted_inverse(A, omega, S: SubspaceBasis, tol=RANK_TOL) -> SubspaceBasis:
    """``(I - omega A)^{-1} S``; raises :class:`ShiftSingular` if not invertible."""
    A = _dense(A)
    M = np.eye(A.shape[0]) - omega * A
    return span(lu_solve_checked(M, S.basis, 1e-14, ShiftSingular), tol)


def sonneveld_recursive(A, P: SubspaceBasis, omegas: Sequence[complex], j: int, tol=RANK_TOL):
    """``G_j = (I - omega_j A)(G_{j-1} ∩ P^⊥)`` starting from ``G_0 = C^N``."""
    if j > len(omegas):
        raise ValueError("not enough relaxations for the requested level")
    A = _dense(A)
    G = full_space(A.shape[0])
    Pp = subspace_perp(P, tol)
    for k in range(j):
        if G.is_zero:
            break
        G = apply_shifted(A, omegas[k], subspace_intersect(G, Pp, tol), tol)
    return G


def sonneveld_direct(A, P: SubspaceBasis, omegas: Sequence[complex], j: int, tol=RANK_TOL):
    """``G_j = (I - omega_1 A) ... (I - omega_j A) K_j^⊥(A^H; P)``."""
    if j > len(omegas):
        raise ValueError("not enough relaxations for the requested level")
    A = _dense(A)
    n = A.shape[0]
    if j == 0:
        return full_space(n)
    G = subspace_perp(krylov_block(A.conj().T, P, j, tol), tol)
    for k in range(j):
        G = apply_shifted(A, omegas[k], G, tol)
    return G


def sonneveld_from_level(A, P: SubspaceBasis, omegas, i: int, j: int, tol=RANK_TOL):
    """``p_{i,j}(A) (G_i ∩ K_{j-i}^⊥(A^H; P))`` with ``G_i`` built recursively."""
    A = _dense(A)
    G = sonneveld_recursive(A, P, omegas, i, tol)
    K = subspace_perp(krylov_block(A.conj().T, P, j - i, tol), tol)
    S = subspace_intersect(G, K, tol)
    for k in range(i, j):
        S = apply_shifted(A, omegas[k], S, tol)
    return S


def test_space(A, P: SubspaceBasis, omegas, j: int, mode="recursive", tol=RANK_TOL):
    """Orthonormal basis of Sonneveld's test space, the complement of ``G_j``.

    ``mode="direct"`` spans ``(p_{0,k}(A^H))^{-1} P`` for ``k = 1..j``;
    ``mode="recursive"`` uses ``C_j = C_{j-1} + (I - omega_j A^H)^{-1} C_{j-1}``
    seeded with ``C_1 = (I - omega_1 A^H)^{-1} P``.
    """
    A = _dense(A)
    AH = A.conj().T
    n = A.shape[0]
    if j == 0:
        return zero_space(n)
    if mode == "direct":
        blocks = []
        W = P.basis
        for k in range(j):
            W = lu_solve_checked(np.eye(n) - omegas[k] * AH, W, 1e-14, ShiftSingular)
            # rescale to keep the blocks comparable in size
            W = W / np.maximum(np.linalg.norm(W, axis=0), np.finfo(float).tiny)
            blocks.append(W)
        return span(np.hstack(blocks), tol)
    if mode == "recursive":
        C = apply_shifted_inverse(AH, omegas[0], P, tol)
        for k in range(1, j):
            C = subspace_sum(C, apply_shifted_inverse(AH, omegas[k], C, tol), tol)
        return C
    raise ValueError(f"unknown mode {mode!r}")


def mspace_sequence(A, P_seq, Q_seq, omegas, j: int, order="cut-shear-add", tol=RANK_TOL):
    """All M-spaces ``[M_0, ..., M_j]``.

    ``P_seq[k]`` and ``Q_seq[k]`` are the cut- and add-space of level ``k + 1``.
    ``order="add-cut-shear"`` switches the recursion to
    ``M_j = (I - omega_j A)((M_{j-1} + Q_j) ∩ P_j^⊥)``.
    """
    if len(P_seq) < j or len(Q_seq) < j or len(omegas) < j:
        raise ValueError("sequences shorter than the requested level")
    A = _dense(A)
    M = full_space(A.shape[0])
    out = [M]
    for k in range(j):
        Pp = subspace_perp(P_seq[k], tol)
        if order == "cut-shear-add":
            M = subspace_sum(apply_shifted(A, omegas[k], subspace_intersect(M, Pp, tol), tol),
                             Q_seq[k], tol)
        elif order == "add-cut-shear":
            M = apply_shifted(A, omegas[k],
                              subspace_intersect(subspace_sum(M, Q_seq[k], tol), Pp, tol), tol)
        else:
            raise ValueError(f"unknown order {order!r}")
        out.append(M)
    return out


def mspace_recursive(A, P_seq, Q_seq, omegas, j: int, order="cut-shear-add", tol=RANK_TOL):
    """``M_j = (I - omega_j A)(M_{j-1} ∩ P_j^⊥) + Q_j`` from ``M_0 = C^N``."""
    return mspace_sequence(A, P_seq, Q_seq, omegas, j, order, tol)[-1]


def distance_to(S: SubspaceBasis, v) -> float:
    """``||v - B B^H v||_2``."""
    v = np.asarray(v, dtype=np.complex128)
    if S.is_zero:
        return float(np.linalg.norm(v))
    B = S.basis
    w = v - B @ (B.conj().T @ v)
    w -= B @ (B.conj().T @ w)
    return float(np.linalg.norm(w))


def is_subspace(S1: SubspaceBasis, S2: SubspaceBasis, tol=1e-9) -> bool:
    """True iff every basis vector of ``S1`` lies within ``tol`` of ``S2``."""
    return all(distance_to(S2, S1.basis[:, k]) <= tol for k in range(S1.dim))


def principal_angles(S1: SubspaceBasis, S2: SubspaceBasis) -> np.ndarray:
    """Principal angles in ascending order (``min(dim1, dim2)`` of them)."""
    if S1.is_zero or S2.is_zero:
        return np.zeros(0)
    return np.sort(scipy.linalg.subspace_angles(S1.basis, S2.basis))


def same_subspace(S1: SubspaceBasis, S2: SubspaceBasis, tol=1e-9) -> bool:
    if S1.dim != S2.dim:
        return False
    ang = principal_angles(S1, S2)
    return ang.size == 0 or float(ang.max()) <= tol


def omegas_from_tau(tau) -> np.ndarray:
    """Relaxations ``omega_1..omega_l`` with ``prod(1 - omega_k t) = 1 - sum tau_k t^k``.

    They are the roots of ``z^l - tau_1 z^{l-1} - ... - tau_l``.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=np.complex128))
    if tau.size == 1:
        return tau.copy()
    return np.roots(np.concatenate([[1.0], -tau])).astype(np.complex128)


# keep pytest from collecting this function when it is imported into tests
test_space.__test__ = False
