import math

import numpy as np
import pytest

import oracles
from plflow.complex import make_builtin
from plflow.curvature import (
    curvature_state,
    functionals,
    grad_Sr,
    jacobian_L,
    make_metric,
    nabla_C,
    rank_check,
    ricci,
    ricci_batch,
    stability_check,
)
from plflow.errors import DegenerateMetric, DimensionMismatch, NotEinstein
from plflow.flows import perturb
from plflow.regular import regular_matrix, regular_xyz

ARCCOS_THIRD = math.acos(1.0 / 3.0)
S16 = make_builtin("sixteen_cell")
M = S16.num_edges


def _noisy(scale=1.0, amp=0.03, seed=0, tri=S16):
    return scale * perturb(np.ones(tri.num_edges), amp, np.random.default_rng(seed))


def test_make_metric_validation():
    assert make_metric([1, 2, 3]).dtype == float
    with pytest.raises(ValueError):
        make_metric([1.0, -1.0])
    with pytest.raises(ValueError):
        make_metric([1.0, np.nan])
    with pytest.raises(DimensionMismatch):
        make_metric(np.ones(5), S16)


def test_ricci_regular_sixteen_cell():
    R = ricci(S16, np.ones(M))
    assert np.allclose(R, 2 * math.pi - 4 * ARCCOS_THIRD, atol=1e-13)


def test_ricci_spherical_sixteen_cell_is_flat():
    R = ricci(S16, np.full(M, math.pi / 2), 1.0)
    assert np.max(np.abs(R)) < 1e-12


def test_ricci_pentachoron_regular():
    tri = make_builtin("pentachoron")
    R = ricci(tri, np.ones(10))
    assert np.allclose(R, 2 * math.pi - 3 * ARCCOS_THIRD)


def test_ricci_matches_coordinate_oracle_on_s3():
    # the 16-cell realized by a generic configuration of 8 points on S^3 is
    # flat in M_1, and the coordinate dihedrals sum to 2 pi around each edge
    rng = np.random.default_rng(11)
    pts = [p + rng.normal(size=4) * 0.05 for p in oracles.sixteen_cell_points_on_s3()]
    pts = [p / np.linalg.norm(p) for p in pts]
    l = np.array([oracles.distance(1.0, pts[a], pts[b]) for a, b in S16.edges])
    R = ricci(S16, l, 1.0)
    assert np.max(np.abs(R)) < 1e-10
    total = np.zeros(M)
    for n, tet in enumerate(S16.tetrahedra):
        total[S16.tet_edges[n]] += oracles.dihedral(1.0, [pts[v] for v in tet])
    assert np.allclose(total, 2 * math.pi, atol=1e-10)


def test_ricci_degenerate_and_dimension_errors():
    l = np.ones(M)
    l[0] = 1.9
    with pytest.raises(DegenerateMetric) as info:
        ricci(S16, l)
    assert 0 in S16.tet_edges[info.value.tet]
    with pytest.raises(DimensionMismatch):
        ricci(S16, np.ones(M - 1))


def test_ricci_batch_flags_bad_rows():
    good = np.ones(M)
    bad = good.copy()
    bad[0] = 1.9
    R, ok = ricci_batch(S16, np.stack([good, bad]))
    assert ok[0].all() and not ok[1].all()
    assert np.allclose(R[0], ricci(S16, good))


def test_laplacian_single_tet_matches_closed_form():
    tri = make_builtin("single_tet")
    for K, l0 in [(1.0, 0.7), (-1.0, 1.1), (0.25, 0.3)]:
        lap = jacobian_L(tri, np.full(6, l0), K)
        assert np.allclose(lap.L, -regular_matrix(*regular_xyz(K, l0)), atol=1e-5)


def test_laplacian_euler_and_symmetry_random():
    for seed in range(5):
        lap = jacobian_L(S16, _noisy(seed=seed, amp=0.05))
        assert lap.euler_residual < 1e-6
        assert lap.left_euler_residual < 1e-6
        assert lap.asymmetry < 1e-6


def test_laplacian_symmetric_in_space_forms():
    for K in (-1.0, 1.0):
        lap = jacobian_L(S16, _noisy(scale=0.8, seed=3), K)
        assert lap.asymmetry < 1e-6
        assert lap.left_euler_residual is None


def test_laplacian_spectrum_unit_sixteen_cell():
    # indefinite, with a one-dimensional kernel spanned by l
    eig = jacobian_L(S16, np.ones(M)).eigenvalues()
    assert np.sum(np.abs(eig) < 1e-6) == 1
    assert eig.min() == pytest.approx(-8 * math.sqrt(2), abs=1e-6)
    assert eig.max() > 0


def test_laplacian_reports_R_and_step():
    l = _noisy(seed=1)
    lap = jacobian_L(S16, l, h_rel=1e-5)
    assert np.allclose(lap.R, ricci(S16, l))
    assert np.allclose(lap.fd_step, 1e-5 * np.maximum(1, l))


def test_laplacian_predicts_curvature_change():
    # evolution equation dR/dt = L dl/dt along a straight path
    l = _noisy(seed=2)
    v = np.random.default_rng(9).normal(size=M)
    lap = jacobian_L(S16, l)
    eps = 1e-4
    dR = (ricci(S16, l + eps * v) - ricci(S16, l - eps * v)) / (2 * eps)
    assert np.allclose(dR, lap.L @ v, atol=1e-6)


def test_functionals_values():
    l = np.array([1.0, 2.0])
    R = np.array([2.0, 4.0])
    st = functionals(R, l)
    assert (st.S, st.C, st.lam) == (10.0, 20.0, 2.0)
    assert st.einstein_residual == 0.0 and st.ricci_flat_residual == 4.0
    zero = functionals(np.zeros(2), l)
    assert zero.einstein_residual == 0.0
    with pytest.raises(DimensionMismatch):
        functionals(np.ones(3), l)


def test_einstein_residual_scale_free():
    l = _noisy(seed=4)
    a = curvature_state(S16, l)
    b = curvature_state(S16, 3.0 * l)
    assert a.einstein_residual == pytest.approx(b.einstein_residual, rel=1e-10)
    assert b.lam == pytest.approx(a.lam / 3.0, rel=1e-10)


def test_total_curvature_gradient_is_R():
    # Schlaefli at K = 0: dS = R . dl
    l = _noisy(seed=5)
    R = ricci(S16, l)
    g = np.empty(M)
    for j in range(M):
        e = np.zeros(M)
        e[j] = 1e-6
        g[j] = (functionals(ricci(S16, l + e), l + e).S - functionals(ricci(S16, l - e), l - e).S) / 2e-6
    assert np.allclose(g, R, atol=1e-7)


@pytest.mark.parametrize("r", [1.0, 2.0, 3.0])
def test_grad_Sr_matches_finite_differences(r):
    l = _noisy(seed=6)

    def Sr(x):
        return float(ricci(S16, x) @ x) / float(x @ x) ** (r / 2)

    fd = np.array([(Sr(l + e) - Sr(l - e)) / 2e-6 for e in np.eye(M) * 1e-6])
    assert np.allclose(grad_Sr(ricci(S16, l), l, r), fd, atol=1e-7)


def test_grad_S1_vanishes_at_einstein():
    # S is 1-homogeneous at K = 0, so S / |l| is the scale-free functional
    l = np.ones(M)
    R = ricci(S16, l)
    assert np.max(np.abs(grad_Sr(R, l, 1.0))) < 1e-14
    assert np.max(np.abs(grad_Sr(R, l, 2.0))) > 1e-2


def test_nabla_C_matches_finite_differences():
    for K, l in [(0.0, _noisy(seed=7)), (1.0, _noisy(scale=1.4, seed=8))]:
        def C(x):
            R = ricci(S16, x, K)
            return float(R @ R)

        fd = np.array([(C(l + e) - C(l - e)) / 2e-6 for e in np.eye(M) * 1e-6])
        lap = jacobian_L(S16, l, K)
        assert np.allclose(nabla_C(lap, lap.R), fd, rtol=1e-4, atol=1e-6)


def test_nabla_C_dimension_check():
    lap = jacobian_L(S16, np.ones(M))
    with pytest.raises(DimensionMismatch):
        nabla_C(lap, np.ones(3))


def test_stability_check_unit_sixteen_cell():
    lap = jacobian_L(S16, np.ones(M))
    rep = stability_check(np.ones(M), lap)
    assert rep.lambda_de == pytest.approx((2 * math.pi - 4 * ARCCOS_THIRD))
    # the attractor condition fails here: L_sym has eigenvalues below lambda on l-perp
    assert not rep.satisfied
    assert rep.max_eig_condition > 1.0
    assert rep.first_eig_L < rep.lambda_de and not rep.first_eig_exceeds_lambda
    # lambda (I - P) - L_sym annihilates l when L l = 0
    assert np.min(np.abs(rep.eigenvalues)) < 1e-6


def test_stability_check_rejects_non_einstein():
    lap = jacobian_L(S16, _noisy(seed=9))
    with pytest.raises(NotEinstein):
        stability_check(_noisy(seed=9), lap)


def test_rank_check_euclidean_kernel_is_l():
    l = _noisy(seed=10)
    rk = rank_check(jacobian_L(S16, l))
    assert rk.rank == M - 1 and rk.corank_one
    assert rk.kernel_aligned_with_l and rk.alignment > 1 - 1e-8


def test_rank_check_spherical_kernel_is_vertex_motions():
    # at K=1, pi/2 the metric sits in an 18-parameter family of flat metrics
    # (8 vertices x 3 directions on S^3, minus the 6-dimensional isometry group)
    rk = rank_check(jacobian_L(S16, np.full(M, math.pi / 2), 1.0))
    assert rk.rank == 6
    assert rk.kernel.shape == (M, 18)
    assert not rk.corank_one


def test_flat_family_tangents_lie_in_kernel():
    # moving one vertex of the cross-polytope along S^3 keeps R = 0 to first
    # order, so the induced length change is a kernel vector of L
    lap = jacobian_L(S16, np.full(M, math.pi / 2), 1.0)
    pts = oracles.sixteen_cell_points_on_s3()
    rng = np.random.default_rng(12)
    for _ in range(3):
        v = rng.integers(8)
        w = rng.normal(size=4)
        w -= (w @ pts[v]) * pts[v]
        moved = list(pts)
        eps = 1e-6
        plus = list(pts)
        plus[v] = (pts[v] + eps * w) / np.linalg.norm(pts[v] + eps * w)
        moved[v] = (pts[v] - eps * w) / np.linalg.norm(pts[v] - eps * w)
        dl = np.array([
            (oracles.distance(1.0, plus[a], plus[b]) - oracles.distance(1.0, moved[a], moved[b])) / (2 * eps)
            for a, b in S16.edges
        ])
        assert np.linalg.norm(dl) > 0.1
        assert np.max(np.abs(lap.L @ dl)) < 1e-6
