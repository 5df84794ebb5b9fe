"""Mesh (JSON) and trace (CSV) file formats.

Mesh files::

    {
      "num_vertices": 8,
      "tetrahedra": [[0, 2, 4, 6], ...],      # 0-based vertex indices
      "edges": [[0, 2], [0, 3], ...],         # sorted pairs, lexicographic
      "lengths": [1.5707963267948966, ...],   # parallel to "edges"
      "K": 0.0,                               # optional, default 0
      "name": "sixteen_cell"                  # optional
    }

The loader rebuilds the canonical edge list from the tetrahedra and
rejects files whose ``edges`` differ from it.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .complex import Triangulation, build_triangulation
from .errors import MeshFormatError
from .flows import FlowTrace

__all__ = [
    "Mesh",
    "mesh_to_json",
    "mesh_from_json",
    "save_mesh",
    "load_mesh",
    "TRACE_COLUMNS",
    "trace_to_csv",
    "write_trace",
    "read_trace",
]

TRACE_COLUMNS = (
    "t", "S", "C", "lambda", "einstein_residual", "flat_residual",
    "norm_l_sq", "min_degeneracy_margin", "dt", "SK_rel",
)
_RECORD_FIELDS = (
    "t", "S", "C", "lam", "einstein_residual", "flat_residual",
    "norm_l_sq", "margin", "dt", "SK_rel",
)


@dataclass
class Mesh:
    tri: Triangulation
    lengths: np.ndarray
    K: float = 0.0
    name: str | None = None


def mesh_to_json(mesh: Mesh) -> str:
    doc = {
        "num_vertices": mesh.tri.num_vertices,
        "tetrahedra": mesh.tri.tetrahedra.tolist(),
        "edges": mesh.tri.edges.tolist(),
        "lengths": [float(x) for x in mesh.lengths],
        "K": float(mesh.K),
    }
    if mesh.name is not None:
        doc["name"] = mesh.name
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _reject_constant(token):
    raise MeshFormatError(f"non-finite number {token} in mesh file")


def _int_list(value, width, key):
    if not isinstance(value, list) or not all(
        isinstance(row, list) and len(row) == width and all(isinstance(v, int) and not isinstance(v, bool)
                                                            for v in row)
        for row in value
    ):
        raise MeshFormatError(f'"{key}" must be a list of {width}-element integer arrays')
    return value


def mesh_from_json(text: str) -> Mesh:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise MeshFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MeshFormatError("mesh file must contain a JSON object")
    for key in ("num_vertices", "tetrahedra", "edges", "lengths"):
        if key not in doc:
            raise MeshFormatError(f'missing key "{key}"')
    n = doc["num_vertices"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 4:
        raise MeshFormatError('"num_vertices" must be an integer >= 4')
    tets = _int_list(doc["tetrahedra"], 4, "tetrahedra")
    edges = _int_list(doc["edges"], 2, "edges")
    lengths = doc["lengths"]
    if not isinstance(lengths, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in lengths
    ):
        raise MeshFormatError('"lengths" must be an array of numbers')
    K = doc.get("K", 0.0)
    if not isinstance(K, (int, float)) or isinstance(K, bool) or not math.isfinite(K):
        raise MeshFormatError('"K" must be a finite number')
    name = doc.get("name")
    if name is not None and not isinstance(name, str):
        raise MeshFormatError('"name" must be a string')

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            tri = build_triangulation(n, tets, name=name)
    except ValueError as exc:
        raise MeshFormatError(str(exc)) from None
    if edges != tri.edges.tolist():
        raise MeshFormatError('"edges" does not match the canonical edge list of the tetrahedra')
    l = np.array(lengths, dtype=float)
    if l.size != tri.num_edges:
        raise MeshFormatError(f'"lengths" has {l.size} entries, expected {tri.num_edges}')
    if not np.all(np.isfinite(l)) or np.any(l <= 0):
        raise MeshFormatError("lengths must be finite and strictly positive")
    return Mesh(tri, l, float(K), name)


def save_mesh(path, mesh: Mesh) -> None:
    Path(path).write_text(mesh_to_json(mesh), encoding="utf-8")


def load_mesh(path) -> Mesh:
    return mesh_from_json(Path(path).read_text(encoding="utf-8"))


def _fmt(x) -> str:
    return format(float(x), ".17g")


def trace_to_csv(trace: FlowTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for rec in trace.records:
        w.writerow([_fmt(getattr(rec, f)) for f in _RECORD_FIELDS])
    return buf.getvalue()


def write_trace(path, trace: FlowTrace) -> None:
    Path(path).write_text(trace_to_csv(trace), encoding="utf-8")


def read_trace(path) -> dict[str, np.ndarray]:
    """Columns of a trace CSV keyed by header name."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TRACE_COLUMNS:
        raise ValueError(f"unexpected trace header: {rows[0] if rows else None}")
    data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float).reshape(-1, len(TRACE_COLUMNS))
    return {name: data[:, n] for n, name in enumerate(TRACE_COLUMNS)}
