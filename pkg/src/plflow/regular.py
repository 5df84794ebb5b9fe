"""Closed-form Jacobian of dihedral angles for a regular tetrahedron in M_K.

For a regular tetrahedron with edge l0 the matrix d(beta)/d(l) in local
edge order (AB, AC, AD, BC, BD, CD) has the pattern

    x on the diagonal, z between opposite edges, y everywhere else,

with eigenvalues x - z (x3), x + z - 2y (x2) and x + z + 4y (x1). The
curvature Laplacian of the tetrahedron is the negative of this matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .complex import OPPOSITE_EDGE
from .errors import OutOfModelRange
from .geometry import ck, sk

__all__ = [
    "RegularLaplacian",
    "regular_cos_beta",
    "regular_xyz",
    "regular_matrix",
    "regular_eigenvalues",
    "regular_classify",
    "regular_laplacian",
]

SINGULAR_TOL = 1e-10


def _check_range(K: float, l0: float) -> float:
    if not (l0 > 0 and math.isfinite(l0)):
        raise OutOfModelRange(f"edge length must be positive, got {l0}")
    if K > 0 and math.sqrt(K) * l0 >= math.pi:
        raise OutOfModelRange(f"l0={l0} exceeds pi/sqrt(K) for K={K}")
    C = ck(K, l0)
    # the regular tetrahedron flattens onto a great sphere at C_K(l0) = -1/3
    if 1.0 + 3.0 * C <= 0:
        raise OutOfModelRange(f"regular tetrahedron with l0={l0} does not exist for K={K}")
    return C


def regular_cos_beta(K: float, l0: float) -> float:
    """cos of the dihedral angle of the regular tetrahedron: C/(1 + 2C), C = C_K(l0)."""
    C = _check_range(K, l0)
    return C / (1.0 + 2.0 * C)


def regular_xyz(K: float, l0: float) -> tuple[float, float, float]:
    """Entries (x, y, z) of d(beta)/d(l) at the regular tetrahedron."""
    C = _check_range(K, l0)
    Ch = ck(K, 0.5 * l0)
    Sh = sk(K, 0.5 * l0)
    root = math.sqrt(1.0 + 3.0 * C)
    s2 = math.sqrt(2.0)
    x = s2 * C * C / (Sh * root * (1.0 + 2.0 * C))
    y = -s2 * C * Ch * Ch / (Sh * (1.0 + 2.0 * C) * root)
    z = s2 * Ch * Ch / (Sh * root)
    return x, y, z


def regular_matrix(x: float, y: float, z: float) -> np.ndarray:
    M = np.full((6, 6), float(y))
    np.fill_diagonal(M, float(x))
    M[np.arange(6), OPPOSITE_EDGE] = float(z)
    return M


def regular_eigenvalues(x: float, y: float, z: float):
    """((value, multiplicity), ...) for x - z, x + z - 2y, x + z + 4y."""
    return ((x - z, 3), (x + z - 2 * y, 2), (x + z + 4 * y, 1))


@dataclass(frozen=True)
class RegularLaplacian:
    K: float
    l0: float
    x: float
    y: float
    z: float
    cos_beta: float
    eigs: tuple
    x_minus_y: float
    x_minus_z: float
    classification: str
    spectrum: np.ndarray  # numerical eigenvalues of regular_matrix(x, y, z)


def regular_laplacian(K: float, l0: float) -> RegularLaplacian:
    x, y, z = regular_xyz(K, l0)
    eigs = regular_eigenvalues(x, y, z)
    vals = np.array([v for v, _ in eigs])
    scale = max(float(np.max(np.abs(vals))), np.finfo(float).tiny)
    if np.min(np.abs(vals)) <= SINGULAR_TOL * scale:
        kind = "singular"
    elif vals.min() < 0 < vals.max():
        kind = "indefinite_nonsingular"
    else:
        kind = "definite_nonsingular"
    return RegularLaplacian(
        K=K, l0=l0, x=x, y=y, z=z,
        cos_beta=regular_cos_beta(K, l0),
        eigs=eigs,
        x_minus_y=x - y,
        x_minus_z=x - z,
        classification=kind,
        spectrum=np.linalg.eigvalsh(regular_matrix(x, y, z)),
    )


def regular_classify(K: float, l0: float) -> tuple[str, RegularLaplacian]:
    rep = regular_laplacian(K, l0)
    return rep.classification, rep
