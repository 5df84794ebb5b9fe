"""Combinatorial 3-dimensional triangulations.

A :class:`Triangulation` stores only incidence: vertices, tetrahedra, a
canonical edge list and the edge/tetrahedron incidence. Edges are sorted
vertex pairs ``(i, j)`` with ``i < j`` in lexicographic order; that order
fixes the indices of every length and curvature vector.
"""
from __future__ import annotations

import itertools
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateVertexInTet,
    EmptyComplex,
    UnknownBuiltin,
    VertexIndexOutOfRange,
)

__all__ = [
    "LOCAL_EDGES",
    "OPPOSITE_EDGE",
    "Triangulation",
    "build_triangulation",
    "make_builtin",
    "tet_edge_indices",
    "BUILTINS",
]

# Local vertex pairs of a tetrahedron (i, j, k, l) in the order
# (ij, ik, il, jk, jl, kl).
LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
# Local index of the edge opposite to each local edge: ij<->kl, ik<->jl, il<->jk.
OPPOSITE_EDGE = (5, 4, 3, 2, 1, 0)


@dataclass(frozen=True, eq=False)
class Triangulation:
    num_vertices: int
    tetrahedra: np.ndarray  # (T, 4) int
    edges: np.ndarray  # (m, 2) int, canonical order
    edge_of_pair: dict = field(repr=False)
    tets_of_edge: tuple = field(repr=False)
    tet_edges: np.ndarray = field(repr=False)  # (T, 6) global edge ids, local order
    faces_of_complex: dict = field(repr=False)  # sorted vertex triple -> incidence count
    closed: bool = True
    name: str | None = None

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_tets(self) -> int:
        return len(self.tetrahedra)

    def edge_index(self, i: int, j: int) -> int:
        return self.edge_of_pair[(min(i, j), max(i, j))]

    def degrees(self) -> np.ndarray:
        """Number of tetrahedra incident to each edge."""
        return np.array([len(t) for t in self.tets_of_edge])


def build_triangulation(num_vertices: int, tets, name: str | None = None) -> Triangulation:
    """Build a triangulation from a list of vertex 4-tuples.

    Non-closed complexes (some triangle not shared by exactly two
    tetrahedra) are accepted; ``closed`` is set to False and a warning is
    emitted.
    """
    tets = [tuple(int(v) for v in t) for t in tets]
    if not tets:
        raise EmptyComplex("a triangulation needs at least one tetrahedron")
    for n, t in enumerate(tets):
        if len(t) != 4:
            raise ValueError(f"tetrahedron {n} has {len(t)} vertices, expected 4")
        if len(set(t)) != 4:
            raise DuplicateVertexInTet(f"tetrahedron {n} repeats a vertex: {t}")
        for v in t:
            if not 0 <= v < num_vertices:
                raise VertexIndexOutOfRange(
                    f"tetrahedron {n} uses vertex {v}, valid range is 0..{num_vertices - 1}"
                )

    pairs = sorted({(min(t[a], t[b]), max(t[a], t[b])) for t in tets for a, b in LOCAL_EDGES})
    edge_of_pair = {p: e for e, p in enumerate(pairs)}
    tet_edges = np.array(
        [[edge_of_pair[(min(t[a], t[b]), max(t[a], t[b]))] for a, b in LOCAL_EDGES] for t in tets],
        dtype=np.intp,
    )
    incident = [[] for _ in pairs]
    for n, row in enumerate(tet_edges):
        for e in row:
            incident[e].append(n)

    faces = Counter(
        tuple(sorted(f)) for t in tets for f in itertools.combinations(t, 3)
    )
    closed = all(c == 2 for c in faces.values())
    if not closed:
        warnings.warn("triangulation is not closed: some face is not shared by exactly two tetrahedra",
                      stacklevel=2)

    tetra = np.array(tets, dtype=np.intp)
    edges = np.array(pairs, dtype=np.intp)
    tetra.setflags(write=False)
    edges.setflags(write=False)
    tet_edges.setflags(write=False)
    return Triangulation(
        num_vertices=int(num_vertices),
        tetrahedra=tetra,
        edges=edges,
        edge_of_pair=edge_of_pair,
        tets_of_edge=tuple(tuple(x) for x in incident),
        tet_edges=tet_edges,
        faces_of_complex=dict(faces),
        closed=closed,
        name=name,
    )


def _sixteen_cell():
    # A1, A2, B1, B2, C1, C2, D1, D2 -> 0..7; tetrahedra A_i B_j C_k D_l.
    tets = [(a, 2 + b, 4 + c, 6 + d) for a in (0, 1) for b in (0, 1) for c in (0, 1) for d in (0, 1)]
    return 8, tets


def _pentachoron():
    return 5, list(itertools.combinations(range(5), 4))


def _single_tet():
    return 4, [(0, 1, 2, 3)]


BUILTINS = {
    "sixteen_cell": _sixteen_cell,
    "pentachoron": _pentachoron,
    "single_tet": _single_tet,
}


def make_builtin(name: str) -> Triangulation:
    try:
        n, tets = BUILTINS[name]()
    except KeyError:
        raise UnknownBuiltin(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}") from None
    with warnings.catch_warnings():
        # single_tet is intentionally open
        warnings.simplefilter("ignore")
        return build_triangulation(n, tets, name=name)


def tet_edge_indices(tri: Triangulation, tet_index: int) -> tuple[int, ...]:
    """Global edge indices of one tetrahedron in local order (ij, ik, il, jk, jl, kl)."""
    if not 0 <= tet_index < tri.num_tets:
        raise IndexError(f"tetrahedron index {tet_index} out of range 0..{tri.num_tets - 1}")
    return tuple(int(e) for e in tri.tet_edges[tet_index])
