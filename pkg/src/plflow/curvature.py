"""Edge curvature, the discrete Laplacian and the curvature functionals.

The edge (combinatorial Ricci) curvature is 2*pi minus the sum of the
dihedral angles at the edge over all incident tetrahedra. The discrete
Laplacian L = dR/dl is assembled by central finite differences; all 2m
perturbed metrics are evaluated in a single vectorized batch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .complex import Triangulation
from .errors import DegenerateMetric, DimensionMismatch, NotEinstein, StepTooLarge
from .geometry import tet_batch

__all__ = [
    "PLMetric",
    "make_metric",
    "CurvatureState",
    "Laplacian",
    "StabilityReport",
    "RankReport",
    "ricci",
    "ricci_batch",
    "jacobian_L",
    "functionals",
    "curvature_state",
    "grad_Sr",
    "nabla_C",
    "stability_check",
    "rank_check",
]

TWO_PI = 2.0 * math.pi
RESIDUAL_FLOOR = 1e-30
EIG_TOL = 1e-7
MAX_HALVINGS = 8


# A PL-metric is a plain float array of edge lengths in canonical edge order.
PLMetric = np.ndarray


def make_metric(lengths, tri: Triangulation | None = None) -> PLMetric:
    """Validated copy of ``lengths``: finite, strictly positive, right dimension."""
    arr = np.array(lengths, dtype=float).reshape(-1)
    if tri is not None and arr.size != tri.num_edges:
        raise DimensionMismatch(f"metric has {arr.size} lengths, triangulation has {tri.num_edges} edges")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("edge lengths must be finite and strictly positive")
    return arr


@dataclass(frozen=True)
class CurvatureState:
    R: np.ndarray
    S: float
    C: float
    lam: float
    einstein_residual: float
    einstein_residual_abs: float
    ricci_flat_residual: float


@dataclass(frozen=True)
class Laplacian:
    L: np.ndarray  # raw FD Jacobian dR/dl
    l: np.ndarray
    R: np.ndarray
    K: float
    asymmetry: float
    euler_residual: float  # ||L l||_inf
    left_euler_residual: float | None  # ||l^T L||_inf, K == 0 only
    fd_step: np.ndarray  # per-column step actually used

    @property
    def sym(self) -> np.ndarray:
        return 0.5 * (self.L + self.L.T)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.sym)


@dataclass(frozen=True)
class StabilityReport:
    lambda_de: float
    max_eig_condition: float
    first_eig_L: float
    first_eig_exceeds_lambda: bool  # first_eig_L > lambda_de
    satisfied: bool
    tol: float
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class RankReport:
    rank: int
    m: int
    kernel: np.ndarray  # (m, m - rank) orthonormal basis
    singular_values: np.ndarray
    corank_one: bool
    kernel_aligned_with_l: bool
    alignment: float  # |cos| between l and its projection on the kernel, 0 if trivial kernel


def ricci_batch(tri: Triangulation, l, K: float = 0.0):
    """Curvature for a batch of metrics ``l`` of shape (B, m).

    Returns ``(R, ok)`` with R of shape (B, m) and ``ok`` of shape (B, T)
    flagging nondegenerate tetrahedra. Rows with a degenerate tet carry
    meaningless curvature.
    """
    l = np.asarray(l, dtype=float)
    B, m = l.shape
    geo = tet_batch(K, l[:, tri.tet_edges], both=False)
    ok = geo.nondegenerate & (geo.link_margin > 0)
    idx = (tri.tet_edges.ravel()[None, :] + m * np.arange(B)[:, None]).ravel()
    sums = np.bincount(idx, weights=geo.beta.reshape(-1), minlength=B * m).reshape(B, m)
    return TWO_PI - sums, ok


def _check_dim(tri, l):
    l = np.asarray(l, dtype=float)
    if l.shape != (tri.num_edges,):
        raise DimensionMismatch(f"metric has shape {l.shape}, expected ({tri.num_edges},)")
    return l


def ricci(tri: Triangulation, l, K: float = 0.0) -> np.ndarray:
    """Edge curvature R_e = 2*pi - sum of dihedral angles at e."""
    l = _check_dim(tri, l)
    if np.any(l <= 0):
        raise DegenerateMetric(int(np.flatnonzero((l[tri.tet_edges] <= 0).any(axis=1))[0]))
    R, ok = ricci_batch(tri, l[None, :], K)
    if not ok.all():
        raise DegenerateMetric(int(np.flatnonzero(~ok[0])[0]))
    return R[0]


def jacobian_L(tri: Triangulation, l, K: float = 0.0, h_rel: float = 1e-5) -> Laplacian:
    """Central finite-difference Jacobian L = dR/dl.

    Column j uses h_j = h_rel * max(1, l_j). A column whose perturbed
    metrics are degenerate has its step halved, at most eight times.
    """
    l = _check_dim(tri, l)
    if np.any(l <= 0):
        raise DegenerateMetric(int(np.flatnonzero((l[tri.tet_edges] <= 0).any(axis=1))[0]))
    m = l.size
    h = h_rel * np.maximum(1.0, l)
    L = np.empty((m, m))
    todo = np.arange(m)
    R0 = None
    for _ in range(MAX_HALVINGS + 1):
        k = todo.size
        E = np.zeros((k, m))
        E[np.arange(k), todo] = h[todo]
        batch = np.concatenate([l[None, :], l + E, l - E])
        R, ok = ricci_batch(tri, batch, K)
        if R0 is None:
            if not ok[0].all():
                raise DegenerateMetric(int(np.flatnonzero(~ok[0])[0]))
            R0 = R[0]
        R, ok = R[1:], ok[1:]
        good = ok.all(axis=1) & np.all(batch[1:] > 0, axis=1)
        good = good[:k] & good[k:]
        L[:, todo[good]] = ((R[:k][good] - R[k:][good]) / (2.0 * h[todo[good]])[:, None]).T
        todo = todo[~good]
        if todo.size == 0:
            break
        h[todo] *= 0.5
    else:
        raise StepTooLarge(f"finite-difference step leaves the metric space for edges {todo.tolist()}")

    asym = float(np.max(np.abs(L - L.T)))
    euler = float(np.max(np.abs(L @ l)))
    left = float(np.max(np.abs(l @ L))) if K == 0 else None
    return Laplacian(L=L, l=l.copy(), R=R0, K=K, asymmetry=asym, euler_residual=euler,
                     left_euler_residual=left, fd_step=h)


def functionals(R, l) -> CurvatureState:
    R = np.asarray(R, dtype=float)
    l = np.asarray(l, dtype=float)
    if R.shape != l.shape:
        raise DimensionMismatch(f"R has shape {R.shape}, l has shape {l.shape}")
    S = float(R @ l)
    C = float(R @ R)
    lam = S / float(l @ l)
    diff = R - lam * l
    return CurvatureState(
        R=R,
        S=S,
        C=C,
        lam=lam,
        einstein_residual=float(np.linalg.norm(diff) / max(np.linalg.norm(R), RESIDUAL_FLOOR)),
        einstein_residual_abs=float(np.max(np.abs(diff))),
        ricci_flat_residual=float(np.max(np.abs(R))),
    )


def curvature_state(tri: Triangulation, l, K: float = 0.0) -> CurvatureState:
    return functionals(ricci(tri, l, K), l)


def grad_Sr(R, l, r: float) -> np.ndarray:
    """Gradient of the normalized total curvature S / ||l||^r."""
    R = np.asarray(R, dtype=float)
    l = np.asarray(l, dtype=float)
    n2 = float(l @ l)
    S = float(R @ l)
    return (R - r * S / n2 * l) / n2 ** (0.5 * r)


def nabla_C(lap: Laplacian, R) -> np.ndarray:
    """Gradient 2 L^T R of the quadratic energy, using the unsymmetrized L."""
    R = np.asarray(R, dtype=float)
    if R.shape != (lap.L.shape[0],):
        raise DimensionMismatch(f"R has shape {R.shape}, L is {lap.L.shape}")
    return 2.0 * lap.L.T @ R


def _projector(l):
    l = np.asarray(l, dtype=float)
    return np.eye(l.size) - np.outer(l, l) / float(l @ l)


def stability_check(l_de, lap: Laplacian, tol: float | None = None,
                    einstein_tol: float = 1e-6) -> StabilityReport:
    """Attractor condition lambda (I - l l^T/|l|^2) - L_sym <= 0 at an Einstein metric.

    ``first_eig_L`` is the smallest eigenvalue of L_sym on the orthogonal
    complement of l (the direction l itself is the kernel when K == 0).
    """
    l = np.asarray(l_de, dtype=float)
    st = functionals(lap.R, l)
    if st.einstein_residual >= einstein_tol:
        raise NotEinstein(f"einstein residual {st.einstein_residual:.3e} exceeds {einstein_tol:g}")
    Ls = lap.sym
    P = _projector(l)
    eig = np.linalg.eigvalsh(st.lam * P - Ls)
    scale = max(float(np.max(np.abs(np.linalg.eigvalsh(Ls)))), 1.0)
    if tol is None:
        tol = EIG_TOL * scale
    # eigenvalues of L_sym restricted to l-perp
    _, vecs = np.linalg.eigh(P)
    Q = vecs[:, 1:]  # P has eigenvalue 0 along l (sorted first), 1 elsewhere
    first = float(np.linalg.eigvalsh(Q.T @ Ls @ Q)[0])
    return StabilityReport(
        lambda_de=st.lam,
        max_eig_condition=float(eig[-1]),
        first_eig_L=first,
        first_eig_exceeds_lambda=first > st.lam,
        satisfied=bool(eig[-1] <= tol),
        tol=tol,
        eigenvalues=eig,
    )


def rank_check(lap: Laplacian, tol: float = EIG_TOL) -> RankReport:
    """Numerical rank of L_sym with singular values cut at tol * sigma_max."""
    U, s, Vt = np.linalg.svd(lap.sym)
    cut = tol * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > cut))
    m = s.size
    kernel = Vt[rank:].T
    if kernel.shape[1]:
        u = lap.l / np.linalg.norm(lap.l)
        alignment = float(np.linalg.norm(kernel.T @ u))
    else:
        alignment = 0.0
    return RankReport(
        rank=rank,
        m=m,
        kernel=kernel,
        singular_values=s,
        corank_one=rank == m - 1,
        kernel_aligned_with_l=rank == m - 1 and alignment > 1 - 1e-6,
        alignment=alignment,
    )
