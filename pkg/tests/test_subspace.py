import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mstab.errors import ShiftSingular
from mstab.linalg import tridiag
from mstab.subspace import (SubspaceBasis, apply_shifted, distance_to, full_space, is_subspace,
                            krylov_block, mspace_sequence, omegas_from_tau, principal_angles,
                            same_subspace, sonneveld_direct, sonneveld_from_level,
                            sonneveld_recursive, span, subspace_intersect, subspace_perp,
                            subspace_sum, test_space as build_test_space, zero_space)

from conftest import random_matrix


def e(n, *idx):
    return span(np.eye(n)[:, list(idx)])


def random_instance(seed, n, s, j):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    P = span(rng.standard_normal((n, s)))
    omegas = rng.uniform(0.3, 1.5, j) * rng.choice([-1, 1], j)
    return A, P, omegas


def test_basis_orthonormal(rng):
    S = span(rng.standard_normal((10, 4)))
    assert np.abs(S.basis.conj().T @ S.basis - np.eye(4)).max() <= 1e-12


def test_krylov_block_examples():
    A = tridiag(2, 3, 1, 8).toarray()
    assert krylov_block(A, e(8, 0), 0).dim == 0
    T = span(np.random.default_rng(0).standard_normal((8, 2)))
    assert same_subspace(krylov_block(np.eye(8), T, 3), T, 1e-10)
    K = krylov_block(A, e(8, 0), 5)
    assert K.dim == 5
    # power-iteration oracle
    powers = [np.linalg.matrix_power(A, k)[:, 0] for k in range(5)]
    assert np.linalg.matrix_rank(np.column_stack(powers)) == 5
    assert all(distance_to(K, p) <= 1e-10 * np.linalg.norm(p) for p in powers)


def test_sum_examples(rng):
    assert subspace_sum(e(3, 0), e(3, 0)).dim == 1
    assert subspace_sum(e(3, 0), e(3, 1)).dim == 2
    common = rng.standard_normal((10, 1))
    S1 = span(np.hstack([common, rng.standard_normal((10, 2))]))
    S2 = span(np.hstack([common, rng.standard_normal((10, 1))]))
    assert subspace_sum(S1, S2).dim == 4


def test_intersect_examples():
    S = e(4, 0, 2)
    assert same_subspace(subspace_intersect(S, S), S)
    assert same_subspace(subspace_intersect(e(3, 0, 1), e(3, 1, 2)), e(3, 1))


def test_intersect_generic_dimension():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        S1 = span(rng.standard_normal((12, 7)))
        S2 = span(rng.standard_normal((12, 8)))
        I = subspace_intersect(S1, S2)
        assert I.dim == 3
        assert is_subspace(I, S1) and is_subspace(I, S2)


def test_perp_examples(rng):
    assert same_subspace(subspace_perp(e(3, 0)), e(3, 1, 2))
    assert subspace_perp(full_space(5)).dim == 0
    S = span(rng.standard_normal((10, 4)))
    Sp = subspace_perp(S)
    assert Sp.dim == 6
    assert np.abs(S.basis.conj().T @ Sp.basis).max() <= 1e-12


def test_apply_shifted_examples(rng):
    S = span(rng.standard_normal((6, 2)))
    assert same_subspace(apply_shifted(np.eye(6), 0.5, S), S)
    assert apply_shifted(np.eye(6), 0.5, zero_space(6)).is_zero
    for _ in range(50):
        A = rng.standard_normal((8, 8))
        S = span(rng.standard_normal((8, 3)))
        assert apply_shifted(A, rng.uniform(0.1, 2.0), S).dim == 3


def test_apply_shifted_eigenvalue_drops_dimension():
    A = np.diag([2.0, 3.0, 5.0])
    assert apply_shifted(A, 0.5, e(3, 0, 1)).dim == 1


def test_sonneveld_identity_matrix(rng):
    P = span(rng.standard_normal((9, 2)))
    for j in (1, 2, 4):
        G = sonneveld_recursive(np.eye(9), P, [0.7] * j, j)
        assert G.dim == 7 and same_subspace(G, subspace_perp(P))


def test_sonneveld_canonical_dimension():
    for seed in range(100):
        A, P, om = random_instance(seed, 12, 2, 7)
        dims = [sonneveld_recursive(A, P, om, j).dim for j in range(7)]
        assert dims == [max(0, 12 - 2 * j) for j in range(7)]


def test_sonneveld_tridiag_n40():
    A = tridiag(2, 3, 1, 40).toarray()
    rng = np.random.default_rng(5)
    P = span(rng.standard_normal((40, 2)))
    om = rng.uniform(0.2, 0.4, 20)
    assert sonneveld_recursive(A, P, om, 19).dim == 2
    assert sonneveld_recursive(A, P, om, 20).is_zero


def test_direct_vs_recursive():
    assert sonneveld_direct(np.eye(4), e(4, 0), [1.0], 0).dim == 4
    for seed in range(10):
        A, P, om = random_instance(seed, 10, 2, 3)
        for j in (1, 3):
            assert same_subspace(sonneveld_direct(A, P, om, j), sonneveld_recursive(A, P, om, j), 1e-10)


def test_sonneveld_from_level():
    for seed in range(10):
        A, P, om = random_instance(seed, 10, 1, 4)
        for i in range(4):
            assert same_subspace(sonneveld_from_level(A, P, om, i, 4),
                                 sonneveld_recursive(A, P, om, 4), 1e-9)


def test_test_space_single_term():
    A, P, om = random_instance(3, 8, 2, 1)
    expected = span(np.linalg.solve(np.eye(8) - om[0] * A.T, P.basis))
    for mode in ("direct", "recursive"):
        assert same_subspace(build_test_space(A, P, om, 1, mode=mode), expected, 1e-10)


def test_test_space_modes_and_complement():
    for seed in range(10):
        for s in (1, 2):
            A, P, om = random_instance(seed, 10, s, 4)
            for j in range(1, 5):
                Cd = build_test_space(A, P, om, j, mode="direct")
                Cr = build_test_space(A, P, om, j, mode="recursive")
                assert same_subspace(Cd, Cr, 1e-9)
                assert same_subspace(subspace_perp(Cd), sonneveld_recursive(A, P, om, j), 1e-9)


def test_test_space_singular_shift():
    A = np.diag([2.0, 4.0, 5.0])
    with pytest.raises(ShiftSingular):
        build_test_space(A, e(3, 0), [0.5], 1, mode="direct")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.permutations(range(4)))
def test_omega_order_irrelevant_for_dimension(seed, perm):
    A, P, om = random_instance(seed, 10, 2, 4)
    G = sonneveld_direct(A, P, om, 4)
    Gp = sonneveld_direct(A, P, om[list(perm)], 4)
    assert same_subspace(G, Gp, 1e-8)


def test_sonneveld_nested():
    for seed in range(100):
        A, P, om = random_instance(seed, 8, 1, 5)
        G = [sonneveld_recursive(A, P, om, j) for j in range(6)]
        assert all(is_subspace(G[j + 1], G[j]) for j in range(5))


def test_is_subspace_trivial(rng):
    S = span(rng.standard_normal((6, 3)))
    assert is_subspace(S, S)
    assert is_subspace(zero_space(6), S)
    assert not is_subspace(full_space(6), S)


def test_distance_examples(rng):
    S = span(rng.standard_normal((10, 3)))
    v = S.basis @ rng.standard_normal(3)
    assert distance_to(S, v) <= 1e-12 * np.linalg.norm(v)
    w = subspace_perp(S).basis[:, 0] * 3.0
    assert distance_to(S, w) == pytest.approx(3.0, rel=1e-12)
    x = rng.standard_normal(10)
    Pp = subspace_perp(S).projector()
    assert distance_to(S, x) == pytest.approx(np.linalg.norm(Pp @ x), rel=1e-12)


def test_principal_angles_orthogonal():
    assert principal_angles(e(3, 0), e(3, 1))[0] == pytest.approx(np.pi / 2)


def test_omegas_from_tau():
    assert omegas_from_tau([0.3])[0] == 0.3
    om = omegas_from_tau([0.5, -0.06])  # (1 - 0.2 t)(1 - 0.3 t)
    assert np.allclose(np.sort(om.real), [0.2, 0.3]) and np.allclose(om.imag, 0)


def test_mspace_reduces_to_sonneveld():
    A, P, om = random_instance(4, 10, 2, 4)
    Ms = mspace_sequence(A, [P] * 4, [zero_space(10)] * 4, om, 4)
    for j in range(5):
        assert same_subspace(Ms[j], sonneveld_recursive(A, P, om, j), 1e-10)


def _nested_sequences(rng, n, j):
    """Growing cut-spaces and shrinking add-spaces."""
    Pvecs = rng.standard_normal((n, j + 1))
    Qvecs = rng.standard_normal((n, 3))
    P_seq = [span(Pvecs[:, :1 + k // 2]) for k in range(j)]
    Q_seq = [span(Qvecs[:, :max(0, 3 - k)]) if k < 3 else zero_space(n) for k in range(j)]
    return P_seq, Q_seq


def test_mspace_nested_and_dimension_bound():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n, j = 12, 6
        A = random_matrix(rng, n)
        P_seq, Q_seq = _nested_sequences(rng, n, j)
        om = rng.uniform(0.2, 0.6, j)
        M = mspace_sequence(A, P_seq, Q_seq, om, j)
        assert all(is_subspace(M[k + 1], M[k]) for k in range(j))
        for k in range(1, j + 1):
            assert M[k].dim <= max(0, M[k - 1].dim - P_seq[k - 1].dim) + Q_seq[k - 1].dim


def test_add_cut_shear_nested_after_next_add():
    # with the add moved in front, M_j + Q_{j+1} is the nested sequence
    for seed in range(20):
        rng = np.random.default_rng(seed)
        n, j = 12, 6
        A = random_matrix(rng, n)
        P_seq, Q_seq = _nested_sequences(rng, n, j + 1)
        om = rng.uniform(0.2, 0.6, j)
        M = mspace_sequence(A, P_seq, Q_seq, om, j, order="add-cut-shear")
        W = [subspace_sum(M[k], Q_seq[k]) for k in range(j + 1)]
        assert all(is_subspace(W[k + 1], W[k]) for k in range(j))


def test_add_cut_shear_spaces_themselves_not_nested():
    # Q_2 outside M_1 makes M_1 + Q_2 the full space, so M_2 = (I - w2 A) P^perp
    rng = np.random.default_rng(0)
    n = 6
    A = random_matrix(rng, n)
    P = span(rng.standard_normal((n, 1)))
    q = span(rng.standard_normal((n, 1)))
    M = mspace_sequence(A, [P, P], [q, q], [0.3, 0.5], 2, order="add-cut-shear")
    assert M[1].dim == M[2].dim == n - 1
    assert not is_subspace(M[2], M[1])


def test_mspace_cross_sequence_inclusion():
    # smaller add-spaces and larger cut-spaces give smaller M-spaces
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        n, j = 12, 6
        A = random_matrix(rng, n)
        P_big, Q_big = _nested_sequences(rng, n, j)
        extra = rng.standard_normal((n, 1))
        P_bigger = [span(np.hstack([P.basis, extra])) for P in P_big]
        Q_small = [zero_space(n)] * j
        om = rng.uniform(0.2, 0.6, j)
        M1 = mspace_sequence(A, P_big, Q_big, om, j)
        M2 = mspace_sequence(A, P_bigger, Q_small, om, j)
        assert all(is_subspace(M2[k], M1[k]) for k in range(j + 1))


def test_mspace_tridiag_n40_dimensions():
    A = tridiag(2, 3, 1, 40).toarray()
    rng = np.random.default_rng(7)
    P = span(rng.standard_normal((40, 2)))
    om = rng.uniform(0.2, 0.4, 31)
    b2 = np.sin(2 * np.pi / 40 * np.arange(1, 41))
    Q = [span(b2[:, None])] * 19 + [zero_space(40)] * 12
    M = mspace_sequence(A, [P] * 31, Q, om, 31)
    dims = [m.dim for m in M]
    assert dims[19] <= 21
    assert dims[29] > 0 and dims[30] == 0
    assert dims[:20] == list(range(40, 20, -1))
    assert dims[19:31] == [21, 19, 17, 15, 13, 11, 9, 7, 5, 3, 1, 0]
