"""Self-check suites run by ``plflow verify``.

Each check yields a :class:`Check` with the measured value and the bound
it is compared against. Suites: identities, regular, flows.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .complex import BUILTINS, make_builtin
from .curvature import functionals, jacobian_L, rank_check, ricci, stability_check
from .flows import FlowConfig, FlowKind, attractor_probe, monitors, perturb, run_flow
from .geometry import ck, dihedral_angles, face_angle, fk, link_dihedrals, sk
from .regular import regular_cos_beta, regular_laplacian, regular_matrix, regular_xyz

__all__ = ["Check", "SUITES", "run_suite", "REGULAR_GRID", "fd_dihedral_jacobian"]

ARCCOS_THIRD = math.acos(1.0 / 3.0)
REGULAR_GRID = [
    (K, l0)
    for K in (-1.0, -0.25, 0.25, 1.0)
    for l0 in (0.3, 0.7, 1.1)
    if K <= 0 or l0 < math.pi / math.sqrt(K)
]


@dataclass
class Check:
    name: str
    value: float
    bound: float
    passed: bool
    note: str = ""

    def as_dict(self):
        return asdict(self)


def _le(name, value, bound, note=""):
    value = float(value)
    return Check(name, value, bound, bool(value <= bound), note)


def fd_dihedral_jacobian(K: float, lens, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian of the six dihedral angles."""
    lens = np.asarray(lens, dtype=float)
    J = np.empty((6, 6))
    for j in range(6):
        e = np.zeros(6)
        e[j] = h
        J[:, j] = (dihedral_angles(K, lens + e) - dihedral_angles(K, lens - e)) / (2 * h)
    return J


def identities_suite(seed: int = 0):
    rng = np.random.default_rng(seed)
    s16 = make_builtin("sixteen_cell")
    m = s16.num_edges

    R = ricci(s16, np.full(m, math.pi / 2))
    st = functionals(R, np.full(m, math.pi / 2))
    yield _le("sixteen_cell_curvature", np.max(np.abs(R - (2 * math.pi - 4 * ARCCOS_THIRD))), 1e-12)
    yield _le("sixteen_cell_lambda", abs(st.lam - (4 * math.pi - 8 * ARCCOS_THIRD) / math.pi), 1e-12)

    lap = jacobian_L(s16, np.ones(m))
    yield _le("euler_formula_Ll", lap.euler_residual, 1e-6)
    yield _le("left_euler_lTL", lap.left_euler_residual, 1e-6)
    yield _le("laplacian_symmetry", lap.asymmetry, 1e-6)
    rk = rank_check(lap)
    yield Check("laplacian_corank_one_kernel_l", rk.rank, m - 1, rk.corank_one and rk.kernel_aligned_with_l)

    worst = 0.0
    for name in BUILTINS:
        tri = make_builtin(name)
        l = np.ones(tri.num_edges) * rng.uniform(0.97, 1.03, tri.num_edges)
        base = ricci(tri, l)
        for t in (0.5, 2.0, 10.0):
            worst = max(worst, float(np.max(np.abs(ricci(tri, t * l) - base))))
    yield _le("scale_invariance", worst, 1e-12)

    b, c = rng.uniform(0.1, 2.0, (2, 10_000))
    gamma = rng.uniform(0.05, math.pi - 0.05, 10_000)
    a = np.sqrt(b * b + c * c - 2 * b * c * np.cos(gamma))
    ref = np.arccos((b * b + c * c - a * a) / (2 * b * c))
    yield _le("cosine_law_reduction", np.max(np.abs(face_angle(0.0, a, b, c) - ref)), 1e-12)

    worst = 0.0
    for K, r in zip(rng.uniform(-4, 4, 2000), rng.uniform(0.01, 1.5, 2000)):
        worst = max(worst, abs(fk(K, r) - 2 * sk(K, r / 2) ** 2))
    yield _le("fk_identity", worst, 1e-12)

    worst = 0.0
    for K, r in zip(rng.uniform(-4, 4, 2000), rng.uniform(0.01, 1.5, 2000)):
        worst = max(worst, abs(K * sk(K, r) ** 2 + ck(K, r) ** 2 - 1))
    yield _le("pythagorean_identity", worst, 1e-12)

    worst = 0.0
    for K in (-1.0, 0.0, 1.0):
        for _ in range(50):
            lens = rng.uniform(0.85, 1.15, 6) * 0.7
            p, q = link_dihedrals(K, lens)
            worst = max(worst, float(np.max(np.abs(p - q))))
    yield _le("link_consistency", worst, 1e-9)


def regular_suite():
    worst_fd = worst_eig = 0.0
    min_pos = math.inf
    sign_ok = True
    for K, l0 in REGULAR_GRID:
        x, y, z = regular_xyz(K, l0)
        J = fd_dihedral_jacobian(K, np.full(6, l0))
        worst_fd = max(worst_fd, float(np.max(np.abs(J - regular_matrix(x, y, z)))))
        rep = regular_laplacian(K, l0)
        expected = np.sort([v for v, mult in rep.eigs for _ in range(mult)])
        worst_eig = max(worst_eig, float(np.max(np.abs(rep.spectrum - expected))))
        min_pos = min(min_pos, x + z - 2 * y)
        sign_ok &= np.sign(x + z + 4 * y) == np.sign(K)
    yield _le("closed_form_vs_fd", worst_fd, 1e-5)
    yield _le("spectrum_formula", worst_eig, 1e-10)
    yield Check("x_plus_z_minus_2y_positive", min_pos, 0.0, min_pos > 0)
    yield Check("sign_x_plus_z_plus_4y_equals_sign_K", float(sign_ok), 1.0, bool(sign_ok))
    x, y, z = regular_xyz(0.0, 1.0)
    yield _le("euclidean_x_plus_z_plus_4y", abs(x + z + 4 * y), 1e-12)
    beta = dihedral_angles(-1.0, np.full(6, 0.7))
    yield _le("cos_beta_cross_check", np.max(np.abs(np.cos(beta) - regular_cos_beta(-1.0, 0.7))), 1e-10)


def flows_suite(seed: int = 42):
    s16 = make_builtin("sixteen_cell")
    m = s16.num_edges
    ones = np.ones(m)

    l0 = perturb(ones, 0.01, np.random.default_rng(seed))
    res = run_flow(FlowKind.NCRF, s16, l0, FlowConfig(dt0=1e-3, t_max=10.0, stop_on_converge=False))
    mon = monitors(res.trace)
    note = f"run ended at t={res.t:.4g} with status {res.status.value}"
    yield _le("ncrf_norm_drift", mon.norm_drift, 1e-8, note)
    yield _le("ncrf_lambda_increase", mon.max_increase["lambda"], 1e-10, note)
    yield _le("ncrf_S_increase", mon.max_increase["S"], 1e-10, note)

    lap = jacobian_L(s16, ones)
    rep = stability_check(ones, lap)
    yield Check(
        "ncrf_attractor_condition_at_unit_sixteen_cell",
        rep.max_eig_condition, rep.tol, rep.satisfied == res.status.converged,
        "condition value > 0 means the attractor hypothesis fails; consistent iff the flow outcome agrees",
    )

    res = run_flow(FlowKind.CRF, s16, l0, FlowConfig(dt0=1e-3, t_max=10.0))
    yield _le("crf_S_increase", monitors(res.trace).max_increase["S"], 1e-10,
              f"run ended at t={res.t:.4g} with status {res.status.value}")

    cfg = FlowConfig(dt0=1e-2, t_max=50.0)
    probe = attractor_probe(FlowKind.NLCF, s16, ones, cfg, n_trials=1, noise=0.01, seed=seed)
    yield _le("nlcf_einstein_residual", probe.worst_residual, 1e-8)
    yield _le("nlcf_C_target_increase", monitors(probe.results[0].trace).max_increase["C_target"], 1e-10)

    cfg = FlowConfig(K=1.0, dt0=1e-2, t_max=50.0)
    probe = attractor_probe(FlowKind.LCF, s16, np.full(m, math.pi / 2), cfg, n_trials=1, noise=0.01, seed=seed)
    yield _le("lcf_K1_flat_residual", probe.worst_residual, 1e-8)
    yield _le("lcf_K1_C_increase", monitors(probe.results[0].trace).max_increase["C"], 1e-10)


SUITES = {
    "identities": identities_suite,
    "regular": regular_suite,
    "flows": flows_suite,
}


def run_suite(name: str) -> list[Check]:
    names = list(SUITES) if name == "all" else [name]
    out = []
    for n in names:
        for check in SUITES[n]():
            check.name = f"{n}.{check.name}"
            out.append(check)
    return out
