"""Discrete curvature flows on triangulated 3-manifolds with PL metrics."""
from .complex import Triangulation, build_triangulation, make_builtin, tet_edge_indices
from .curvature import (
    CurvatureState,
    Laplacian,
    curvature_state,
    functionals,
    grad_Sr,
    jacobian_L,
    make_metric,
    nabla_C,
    rank_check,
    ricci,
    stability_check,
)
from .flows import FlowConfig, FlowKind, FlowStatus, attractor_probe, flow_field, monitors, run_flow, sk_relative
from .geometry import ck, cm_volume, dihedral_angles, face_angle, fk, metric_nondegenerate, sk, tet_nondegenerate
from .regular import regular_classify, regular_cos_beta, regular_matrix, regular_xyz

__version__ = "0.1.0"
