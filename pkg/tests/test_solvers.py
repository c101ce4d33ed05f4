import numpy as np
import pytest

from mstab import FetchPolicy, RecycleData, tridiag
from mstab.errors import MissingOmegas
from mstab.linalg import DenseOperator
from mstab.recycle import fingerprint
from mstab.solvers import (IterationState, SolverConfig, Status, arnoldi_init, bicg_projection,
                           bicg_solve, bicgstab_solve, generate_cut_space, gmres_solve,
                           idrstab_solve, level_iteration, mstab_solve, poly_combination,
                           sridr_solve)
from mstab.subspace import distance_to, mspace_sequence, sonneveld_recursive, span, zero_space

from conftest import random_matrix


def cycle_residuals(solver, *args, **kw):
    """Run a solver with a callback and collect the residual after every cycle."""
    seen = []
    solver(*args, callback=lambda c, snap: seen.append(snap.r.copy()), **kw)
    return seen


# ---------------------------------------------------------------- config

def test_config_invariants():
    for bad in (dict(s=0), dict(ell=0), dict(tol=0.0), dict(s=4, max_mv=4)):
        with pytest.raises(ValueError):
            SolverConfig(**bad)


# ---------------------------------------------------------------- pieces

def test_arnoldi_identity():
    U, V = arnoldi_init(DenseOperator(np.eye(3)), np.eye(3)[:, 0].astype(complex), 1)
    assert np.allclose(U[:, 0], [1, 0, 0]) and np.allclose(V[:, 0], [1, 0, 0])


@pytest.mark.parametrize("n,s", [(8, 3), (6, 6)])
def test_arnoldi_orthonormal(n, s):
    A = tridiag(2, 3, 1, n)
    U, V = arnoldi_init(A, np.ones(n, dtype=complex), s)
    assert np.abs(U.conj().T @ U - np.eye(s)).max() <= 1e-12
    assert np.abs(V - A.toarray() @ U).max() <= 1e-12


def test_arnoldi_happy_breakdown_padding():
    # e1 is an eigenvector: K_s collapses after one vector
    A = DenseOperator(np.diag([2.0, 3.0, 4.0, 5.0]))
    U, V = arnoldi_init(A, np.eye(4)[:, 0].astype(complex), 3)
    assert np.abs(U.conj().T @ U - np.eye(3)).max() <= 1e-12
    assert np.allclose(V, A.array @ U)


def test_bicg_projection_examples(rng):
    P = generate_cut_space(10, 2, seed=3)
    c = np.array([1.0, -2.0])
    assert np.allclose(bicg_projection(P, P, P @ c), c, atol=1e-13)
    t = rng.standard_normal(10).astype(complex)
    t -= P @ (P.conj().T @ t)
    assert np.abs(bicg_projection(P, P, t)).max() <= 1e-14
    block, target = rng.standard_normal((10, 2)), rng.standard_normal(10)
    g = bicg_projection(P, block, target)
    assert np.abs(P.conj().T @ (target - block @ g)).max() <= 1e-10 * np.linalg.norm(target)


def _fresh_state(A, b, s, ell, seed=0):
    r = b.astype(complex)
    U, V = arnoldi_init(A, r, s)
    return IterationState.start(np.zeros_like(r), r, U, V, ell), generate_cut_space(len(b), s, seed)


def test_level_iteration_identity_matrix():
    A = DenseOperator(np.eye(5))
    b = np.arange(1.0, 6.0)
    st, P = _fresh_state(A, b, 1, 1)
    level_iteration(st, A, P, 0)
    assert abs(np.vdot(P[:, 0], st.r_levels[0])) <= 1e-13
    assert np.allclose(st.r_levels[1], st.r_levels[0])


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_level_iteration_orthogonality_and_levels(rng, ell):
    M = random_matrix(rng, 10)
    A = DenseOperator(M)
    st, P = _fresh_state(A, rng.standard_normal(10), 2, ell)
    for k in range(ell):
        level_iteration(st, A, P, k)
        K = P.copy()
        basis = [P]
        for _ in range(k):
            basis.append(M.conj().T @ basis[-1])
        K = np.hstack(basis)
        scale = np.linalg.norm(st.r_levels[0]) + 1.0
        assert np.abs(K.conj().T @ st.r_levels[0]).max() <= 1e-9 * scale
        assert np.abs(K.conj().T @ st.v_levels[1]).max() <= 1e-9 * np.abs(st.v_levels[1]).max()
        for i in range(k + 1):
            ref = M @ st.r_levels[i]
            assert np.linalg.norm(st.r_levels[i + 1] - ref) <= 1e-9 * np.linalg.norm(ref)
            refV = M @ st.v_levels[i]
            assert np.abs(st.v_levels[i + 1] - refV).max() <= 1e-9 * np.abs(refV).max()


@pytest.mark.parametrize("ell", [1, 2])
def test_poly_combination(rng, ell):
    M = random_matrix(rng, 12)
    A = DenseOperator(M)
    b = rng.standard_normal(12)
    st, P = _fresh_state(A, b, 2, ell)
    for k in range(ell):
        level_iteration(st, A, P, k)
    r0 = st.r_levels[0].copy()
    r1 = st.r_levels[1].copy()
    x, r, U, V, tau = poly_combination(st, ell)
    assert np.linalg.norm(r) <= np.linalg.norm(r0) * (1 + 1e-14)
    assert np.linalg.norm(b - M @ x - r) <= 1e-8 * np.linalg.norm(b)
    assert np.abs(V - M @ U).max() <= 1e-9 * np.abs(V).max()
    if ell == 1:
        assert tau[0] == pytest.approx(np.vdot(r1, r0) / np.vdot(r1, r1), rel=1e-12)


# ---------------------------------------------------------------- IDRstab

def test_identity_converges_in_one_cycle():
    b = np.arange(1.0, 7.0)
    x, rep, _ = idrstab_solve(DenseOperator(np.eye(6)), b, cfg=SolverConfig(s=2))
    assert rep.converged and rep.cycles == 1
    assert np.allclose(x, b, atol=1e-12)


@pytest.mark.parametrize("s,ell", [(1, 1), (2, 1), (2, 2), (4, 1), (4, 3)])
def test_tridiag_n40_converges(tri40, rhs40, s, ell):
    b = rhs40[0]
    x, rep, _ = idrstab_solve(tri40, b, cfg=SolverConfig(s=s, ell=ell))
    assert rep.converged
    assert np.linalg.norm(b - tri40.matvec(x)) <= 1e-7 * np.linalg.norm(b)
    assert rep.h_mv == s + rep.cycles * ell * (s + 1)
    assert rep.h_rd == rep.level * s
    assert rep.level == rep.cycles * ell


def test_history_consistency(tri40, rhs40):
    b = rhs40[0]
    xs = []
    cycle_x = lambda c, snap: xs.append((snap.x.copy(), snap.r.copy()))
    idrstab_solve(tri40, b, cfg=SolverConfig(s=2), callback=cycle_x)
    for x, r in xs:
        true = np.linalg.norm(b - tri40.matvec(x))
        assert abs(true - np.linalg.norm(r)) <= 1e-6 * np.linalg.norm(b)


def test_true_residual_mode_counts_separately(tri40, rhs40):
    _, rep, _ = idrstab_solve(tri40, rhs40[0], cfg=SolverConfig(s=2, true_residual_each_cycle=True))
    assert rep.extra_mv == 1 + rep.cycles
    assert rep.h_mv == 2 + 3 * rep.cycles


def test_max_mv_status(tri40, rhs40):
    _, rep, _ = idrstab_solve(tri40, rhs40[0], cfg=SolverConfig(s=2, max_mv=10))
    assert rep.status is Status.MAX_MV
    assert rep.h_mv <= 10 + 3


def test_max_cycles_status(tri40, rhs40):
    _, rep, _ = idrstab_solve(tri40, rhs40[0], cfg=SolverConfig(s=2, max_cycles=4))
    assert rep.status is Status.MAX_CYCLES and rep.cycles == 4


def test_complex_system(rng):
    n = 16
    M = random_matrix(rng, n) + 1j * rng.standard_normal((n, n)) / np.sqrt(n)
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x, rep, _ = idrstab_solve(DenseOperator(M), b, cfg=SolverConfig(s=2, ell=2))
    assert rep.converged
    assert np.linalg.norm(b - M @ x) <= 1e-7 * np.linalg.norm(b)


@pytest.mark.parametrize("s", [1, 2, 3])
def test_sonneveld_membership(s):
    n = 24
    A = tridiag(2, 3, 1, n)
    b = np.ones(n)
    cfg = SolverConfig(s=s, tol=1e-12)
    res = cycle_residuals(idrstab_solve, A, b, cfg=cfg)
    _, rep, out = idrstab_solve(A, b, cfg=cfg)
    P = span(out.P)
    om = rep.omegas
    dense = A.toarray()
    for j, r in enumerate(res[:6], start=1):
        G = sonneveld_recursive(dense, P, om, j)
        assert distance_to(G, r) <= 1e-6 * np.linalg.norm(r)


def test_mspace_membership():
    n, s, J = 24, 2, 4
    A = tridiag(2, 3, 1, n)
    dense = A.toarray()
    _, _, data = idrstab_solve(A, np.ones(n), cfg=SolverConfig(s=s, tol=1e-12),
                               fetch_policy=FetchPolicy.at_cycle(J))
    b2 = np.sin(2 * np.pi / n * np.arange(1, n + 1))
    cfg = SolverConfig(s=s, tol=1e-12)
    res = cycle_residuals(mstab_solve, A, b2, data, cfg=cfg)
    _, rep, _ = mstab_solve(A, b2, data, cfg=cfg)
    om = np.concatenate([data.omega_history, rep.omegas])
    P = span(data.P)
    Q = [span(b2[:, None])] * J + [zero_space(n)] * 6
    M = mspace_sequence(dense, [P] * (J + 6), Q, om, J + min(6, len(res)))
    for j, r in enumerate(res[:6], start=1):
        assert distance_to(M[J + j], r) <= 1e-6 * np.linalg.norm(r)


# ---------------------------------------------------------------- recycling solvers

def _data_level0(A, b, s, seed=0):
    """Recycle data at level 0: fresh cut-space and Arnoldi block, no relaxations."""
    n = A.shape[0]
    P = generate_cut_space(n, s, seed, real=True)
    U, V = arnoldi_init(A, np.asarray(b, dtype=complex), s, np.random.default_rng(seed + 1))
    return RecycleData(P, U, V, np.zeros(0), 0, fingerprint(A))


def test_mstab_requires_data(tri40, rhs40):
    with pytest.raises(ValueError):
        mstab_solve(tri40, rhs40[1], None)


def test_mstab_wrong_s(tri40, rhs40):
    _, _, data = idrstab_solve(tri40, rhs40[0], cfg=SolverConfig(s=2),
                               fetch_policy=FetchPolicy.at_cycle(3))
    with pytest.raises(ValueError):
        mstab_solve(tri40, rhs40[1], data, cfg=SolverConfig(s=4))


def test_sridr_j0_equals_idr(tri40, rhs40):
    b = rhs40[0]
    data = _data_level0(tri40, b, 2)
    _, rep_idr, _ = idrstab_solve(tri40, b, cfg=SolverConfig(s=2))
    _, rep_sr = sridr_solve(tri40, b, data, cfg=SolverConfig(s=2))
    assert np.allclose(rep_sr.residual_norms, rep_idr.residual_norms, rtol=1e-10, atol=0)
    assert rep_sr.h_mv == rep_idr.h_mv - 2


def test_sridr_recycled_phase_membership():
    n, s, J = 24, 2, 8
    A = tridiag(2, 3, 1, n)
    _, _, data = idrstab_solve(A, np.ones(n), cfg=SolverConfig(s=s, tol=1e-14),
                               fetch_policy=FetchPolicy.at_cycle(J))
    b2 = np.sin(2 * np.pi / n * np.arange(1, n + 1))
    x, rep = sridr_solve(A, b2, data, cfg=SolverConfig(s=s, tol=1e-14, max_cycles=J))
    assert rep.h_mv == J * (s + 1) - J * s == 8
    r = b2 - A.matvec(x)
    G = sonneveld_recursive(A.toarray(), span(data.P), data.omega_history, J)
    assert G.dim == n - J * s
    assert distance_to(G, r) <= 1e-6 * np.linalg.norm(r)


def test_sridr_converges(tri40, rhs40):
    _, _, data = idrstab_solve(tri40, rhs40[0], cfg=SolverConfig(s=2),
                               fetch_policy=FetchPolicy.at_cycle(10))
    x, rep = sridr_solve(tri40, rhs40[1], data, cfg=SolverConfig(s=2, true_residual_each_cycle=True))
    assert rep.converged
    assert np.linalg.norm(rhs40[1] - tri40.matvec(x)) <= 1e-8 * np.linalg.norm(rhs40[1]) * 10


def test_sridr_missing_omegas(tri40, rhs40):
    _, _, data = idrstab_solve(tri40, rhs40[0], cfg=SolverConfig(s=2, ell=2),
                               fetch_policy=FetchPolicy.at_cycle(2))
    stripped = RecycleData(data.P, data.U, data.V, data.omega_history[:1], data.level,
                           data.matrix_fingerprint)
    with pytest.raises(MissingOmegas):
        sridr_solve(tri40, rhs40[1], stripped, cfg=SolverConfig(s=2))
    with pytest.raises(ValueError):
        sridr_solve(tri40, rhs40[1], data, cfg=SolverConfig(s=2, ell=2))


# ---------------------------------------------------------------- baselines

def test_gmres_examples(tri40, rhs40):
    b = np.arange(1.0, 5.0)
    x, rep = gmres_solve(DenseOperator(np.eye(4)), b)
    assert rep.cycles == 1 and np.allclose(x, b)
    x, rep = gmres_solve(tri40, rhs40[0])
    norms = rep.residual_norms
    assert rep.converged and rep.cycles <= 40
    assert np.all(np.diff(norms) <= 1e-12 * norms[0])
    assert np.linalg.norm(rhs40[0] - tri40.matvec(x)) <= 1e-8 * np.linalg.norm(rhs40[0]) * 1.01


def test_gmres_complex(rng):
    n = 12
    M = random_matrix(rng, n) + 1j * rng.standard_normal((n, n))
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x, rep = gmres_solve(DenseOperator(M), b, tol=1e-12)
    assert rep.converged and np.linalg.norm(b - M @ x) <= 1e-10 * np.linalg.norm(b)


def test_bicg_identity_and_n40(tri40, rhs40):
    x, rep = bicg_solve(DenseOperator(np.eye(3)), np.ones(3))
    assert rep.converged and rep.cycles == 1
    _, rep = bicg_solve(tri40, rhs40[0])
    assert rep.converged and rep.h_mv <= 120
    assert rep.h_mv == 80  # regression pin


def _cg_norms(d, b, iters):
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    out = [np.linalg.norm(r)]
    for _ in range(iters):
        q = d * p
        a = (r @ r) / (p @ q)
        x += a * p
        rn = r - a * q
        p = rn + (rn @ rn) / (r @ r) * p
        r = rn
        out.append(np.linalg.norm(r))
    return np.array(out)


def test_bicg_equals_cg_on_spd_diagonal(rng):
    d = rng.uniform(1.0, 10.0, 30)
    b = rng.standard_normal(30)
    _, rep = bicg_solve(DenseOperator(np.diag(d)), b, tol=1e-9)
    got = rep.residual_norms
    want = _cg_norms(d, b, len(got) - 1)
    assert np.allclose(got, want, rtol=1e-10, atol=1e-10 * want[0])


def test_bicgstab_identity_and_n40(tri40, rhs40):
    x, rep = bicgstab_solve(DenseOperator(np.eye(3)), np.ones(3))
    assert rep.converged and np.allclose(x, 1)
    x, rep = bicgstab_solve(tri40, rhs40[0])
    assert rep.converged and rep.h_mv <= 120
    assert np.linalg.norm(rhs40[0] - tri40.matvec(x)) <= 1e-7 * np.linalg.norm(rhs40[0])


def test_bicgstab_matches_idr1stab1():
    agree = 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        M = random_matrix(rng, 20)
        b = rng.standard_normal(20)
        cfg = SolverConfig(s=1, ell=1, tol=1e-14, seed=seed)
        _, rep_idr, out = idrstab_solve(DenseOperator(M), b, cfg=cfg)
        _, rep_bs = bicgstab_solve(DenseOperator(M), b, tol=1e-14, shadow=out.P[:, 0])
        a, c = rep_idr.residual_norms[:11], rep_bs.residual_norms[:11]
        agree += bool(np.all(np.abs(a - c) <= 1e-6 * np.abs(c)))
    assert agree >= 8
