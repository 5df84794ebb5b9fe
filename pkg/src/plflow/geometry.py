"""Tetrahedron geometry in the model space of constant curvature K.

All six-length arguments use the local edge order (ij, ik, il, jk, jl, kl)
of :data:`plflow.complex.LOCAL_EDGES`. ``K == 0`` selects the Euclidean
formulas exactly; any nonzero K uses the sin / sinh branches.

Dihedral angles are obtained from vertex links: the three face angles at a
vertex p form a spherical triangle, and the dihedral angle along pq is the
angle of that triangle at the direction of q. This works unchanged for
every K.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .complex import LOCAL_EDGES, Triangulation
from .errors import DegenerateTet, InvalidTriangle

__all__ = [
    "sk",
    "ck",
    "fk",
    "CMVolume",
    "cm_volume",
    "triangle_valid",
    "face_angle",
    "dihedral_angles",
    "link_dihedrals",
    "tet_nondegenerate",
    "metric_nondegenerate",
    "tet_batch",
    "TetBatch",
    "degeneracy_margin",
]

TWO_PI = 2.0 * math.pi

# local edge index of every vertex pair
_EDGE = {}
for _n, (_a, _b) in enumerate(LOCAL_EDGES):
    _EDGE[(_a, _b)] = _EDGE[(_b, _a)] = _n
_FACES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))


def _scalar_out(x, like):
    return float(x) if np.ndim(like) == 0 else x


def sk(K: float, t):
    """Generalized sine: sin(sqrt(K) t)/sqrt(K), t, or sinh(sqrt(-K) t)/sqrt(-K)."""
    t = np.asarray(t, dtype=float)
    if K > 0:
        r = math.sqrt(K)
        out = np.sin(r * t) / r
    elif K < 0:
        r = math.sqrt(-K)
        out = np.sinh(r * t) / r
    else:
        out = t.copy()
    return _scalar_out(out, t)


def ck(K: float, t):
    """Generalized cosine: cos(sqrt(K) t), 1, or cosh(sqrt(-K) t)."""
    t = np.asarray(t, dtype=float)
    if K > 0:
        out = np.cos(math.sqrt(K) * t)
    elif K < 0:
        out = np.cosh(math.sqrt(-K) * t)
    else:
        out = np.ones_like(t)
    return _scalar_out(out, t)


# fk(K, r) = r^2 * sum_n (-K r^2)^n / (2n + 2)!   (series used where 1 - C_K cancels)
_FK_SERIES = np.array([(-1.0) ** n / math.factorial(2 * n + 2) for n in range(12)])
_FK_SERIES_BOUND = 0.1


def fk(K: float, r):
    """Integral of sk from 0 to r: (1 - ck(K, r))/K, or r^2/2 when K == 0."""
    r = np.asarray(r, dtype=float)
    if K == 0:
        return _scalar_out(0.5 * r * r, r)
    x = K * r * r
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = (1.0 - ck(K, r)) / K
    series = r * r * np.polynomial.polynomial.polyval(x, _FK_SERIES)
    out = np.where(np.abs(x) < _FK_SERIES_BOUND, series, direct)
    return _scalar_out(out, r)


class CMVolume(NamedTuple):
    volume: float  # sqrt(max(det, 0)/288)
    signed: float  # det(A)/288, the signed squared volume


def _cm_matrix(lens):
    lens = np.asarray(lens, dtype=float)
    sq = lens * lens
    A = np.ones(lens.shape[:-1] + (5, 5))
    A[..., 0, 0] = 0.0
    for p in range(4):
        A[..., p + 1, p + 1] = 0.0
    for n, (p, q) in enumerate(LOCAL_EDGES):
        A[..., p + 1, q + 1] = sq[..., n]
        A[..., q + 1, p + 1] = sq[..., n]
    return A


def cm_signed(lens):
    """det(A_ijkl)/288 for one or many tetrahedra (Euclidean)."""
    return np.linalg.det(_cm_matrix(lens)) / 288.0


def cm_volume(lens) -> CMVolume:
    """Euclidean volume from the Cayley-Menger determinant.

    Degenerate input is reported through ``signed`` (< 0 means the lengths
    are not realizable), never raised.
    """
    s = float(cm_signed(np.asarray(lens, dtype=float).reshape(6)))
    return CMVolume(math.sqrt(max(s, 0.0)), s)


def triangle_valid(K: float, a, b, c):
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    ok = (a > 0) & (b > 0) & (c > 0) & (a < b + c) & (b < a + c) & (c < a + b)
    if K > 0:
        bound = math.pi / math.sqrt(K)
        ok &= (a < bound) & (b < bound) & (c < bound) & (a + b + c < 2.0 * bound)
    return bool(ok) if ok.ndim == 0 else ok


def _face_cos(K, opp, b, c):
    if K == 0:
        return (b * b + c * c - opp * opp) / (2.0 * b * c)
    # f_K(opp) = f_K(b - c) + S_K(b) S_K(c) (1 - cos)
    return 1.0 - (fk(K, opp) - fk(K, b - c)) / (sk(K, b) * sk(K, c))


def face_angle(K: float, opp, b, c):
    """Angle between sides b and c of a geodesic triangle in M_K, opposite ``opp``."""
    if not np.all(triangle_valid(K, opp, b, c)):
        raise InvalidTriangle(f"sides ({opp}, {b}, {c}) do not form a triangle for K={K}")
    opp, b, c = (np.asarray(v, dtype=float) for v in (opp, b, c))
    out = np.arccos(np.clip(_face_cos(K, opp, b, c), -1.0, 1.0))
    return _scalar_out(out, opp)


class TetBatch(NamedTuple):
    beta: np.ndarray  # (..., 6) dihedral angles from the first endpoint's link
    beta_other: np.ndarray | None  # (..., 6) the same angles from the second endpoint's link
    faces_ok: np.ndarray  # (...) all four faces valid (incl. length bounds)
    link_margin: np.ndarray  # (...) min over vertex links of the spherical triangle slack
    nondegenerate: np.ndarray  # (...) tet_nondegenerate criterion


def _angle_tables():
    # face angles: vertex p between directions q and r (q < r)
    fa, where = [], {}
    for p in range(4):
        others = [v for v in range(4) if v != p]
        for i in range(3):
            for j in range(i + 1, 3):
                q, r = others[i], others[j]
                where[p, q, r] = where[p, r, q] = len(fa)
                fa.append((_EDGE[(q, r)], _EDGE[(p, q)], _EDGE[(p, r)]))
    fa = np.array(fa)

    def link(p, q):
        r, s = [v for v in range(4) if v not in (p, q)]
        return where[p, r, s], where[p, q, r], where[p, q, s]

    first = np.array([link(p, q) for p, q in LOCAL_EDGES])
    second = np.array([link(q, p) for p, q in LOCAL_EDGES])
    links = []
    for p in range(4):
        q, r, s = [v for v in range(4) if v != p]
        links.append((where[p, r, s], where[p, q, s], where[p, q, r]))
    faces = np.array([(_EDGE[(q, r)], _EDGE[(p, q)], _EDGE[(p, r)]) for p, q, r in _FACES])
    return fa, first, second, np.array(links), faces


_FA, _LINK_FIRST, _LINK_SECOND, _LINKS, _FACE_EDGES = _angle_tables()


def _link_angles(alpha, table):
    a, b, c = (alpha[..., table[:, n]] for n in range(3))
    cos = (np.cos(a) - np.cos(b) * np.cos(c)) / (np.sin(b) * np.sin(c))
    return np.arccos(np.clip(cos, -1.0, 1.0))


def tet_batch(K: float, lens, both: bool = True) -> TetBatch:
    """Vectorized per-tetrahedron geometry for lengths of shape (..., 6).

    ``both=False`` skips the second-endpoint dihedral angles
    (``beta_other`` is then None).
    """
    lens = np.asarray(lens, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        cos = _face_cos(K, lens[..., _FA[:, 0]], lens[..., _FA[:, 1]], lens[..., _FA[:, 2]])
        alpha = np.arccos(np.clip(cos, -1.0, 1.0))  # (..., 12)

        faces_ok = np.all(
            triangle_valid(K, *(lens[..., _FACE_EDGES[:, n]] for n in range(3))), axis=-1
        )
        a, b, c = (alpha[..., _LINKS[:, n]] for n in range(3))
        slack = np.stack([b + c - a, a + c - b, a + b - c, TWO_PI - a - b - c], axis=-1)
        link_margin = np.where(faces_ok, slack.min(axis=(-1, -2)), -np.inf)

        beta = _link_angles(alpha, _LINK_FIRST)
        beta_other = _link_angles(alpha, _LINK_SECOND) if both else None

    if K == 0:
        nondeg = faces_ok & (cm_signed(lens) > 0)
    else:
        nondeg = faces_ok & (link_margin > 0)
    return TetBatch(beta, beta_other, faces_ok, link_margin, nondeg)


def _single(lens):
    lens = np.asarray(lens, dtype=float)
    if lens.shape != (6,):
        raise ValueError(f"expected 6 edge lengths, got shape {lens.shape}")
    return lens


def link_dihedrals(K: float, lens) -> tuple[np.ndarray, np.ndarray]:
    """Dihedral angles computed from both endpoint links of each edge."""
    b = tet_batch(K, _single(lens))
    if not (b.faces_ok and b.link_margin > 0):
        raise DegenerateTet(f"vertex link is not a valid spherical triangle (K={K}, lengths={lens})")
    return b.beta, b.beta_other


def dihedral_angles(K: float, lens) -> np.ndarray:
    """Six dihedral angles (radians) of a tetrahedron in M_K, local edge order."""
    return link_dihedrals(K, lens)[0]


def tet_nondegenerate(K: float, lens) -> bool:
    """Realizability of six lengths as a nondegenerate tetrahedron in M_K.

    K == 0: positive lengths, valid faces and positive Cayley-Menger volume.
    K != 0: valid faces and strictly valid spherical vertex links (for K > 0
    the face test also bounds every length by pi/sqrt(K)).
    """
    return bool(tet_batch(K, _single(lens)).nondegenerate)


def metric_nondegenerate(tri: Triangulation, l, K: float = 0.0) -> tuple[bool, int | None]:
    """Check every tetrahedron; returns (ok, first offending tetrahedron or None)."""
    l = np.asarray(l, dtype=float)
    bad = np.flatnonzero(~tet_batch(K, l[tri.tet_edges], both=False).nondegenerate)
    if bad.size:
        return False, int(bad[0])
    return True, None


def degeneracy_margin(tri: Triangulation, l, K: float = 0.0) -> float:
    """Distance-like monitor to the degenerate set.

    Minimum signed squared volume det/288 when K == 0, minimum vertex-link
    slack otherwise. Negative or -inf means degenerate.
    """
    lens = np.asarray(l, dtype=float)[tri.tet_edges]
    if K == 0:
        return float(np.min(cm_signed(lens)))
    return float(np.min(tet_batch(K, lens, both=False).link_margin))
