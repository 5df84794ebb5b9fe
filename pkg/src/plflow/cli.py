"""Command-line interface: ``plflow {mesh,curvature,laplacian,flow,verify}``.

Exit codes: 0 success, 1 verification failure, 2 bad arguments or
malformed input, 3 I/O failure, 4 degenerate metric, 5 flow degenerated
or step underflow, 6 flow reached t_max without converging.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from .complex import BUILTINS, make_builtin
from .curvature import functionals, jacobian_L, rank_check, ricci, stability_check
from .errors import DegenerateMetric, MeshFormatError, NotEinstein, PLFlowError, StepTooLarge
from .flows import FlowConfig, FlowKind, FlowStatus, perturb, run_flow, thread_count
from .io import Mesh, load_mesh, mesh_to_json, write_trace
from .verify import SUITES, run_suite

EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DEGENERATE = 4
EXIT_FLOW_FAILED = 5
EXIT_MAX_TIME = 6


class CLIError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _load(path, K_override=None) -> Mesh:
    try:
        mesh = load_mesh(path)
    except OSError as exc:
        raise CLIError(EXIT_IO, f"cannot read {path}: {exc}") from None
    except MeshFormatError as exc:
        raise CLIError(EXIT_USAGE, f"{path}: {exc}") from None
    if K_override is not None:
        mesh.K = K_override
    return mesh


def _degenerate(exc: DegenerateMetric):
    return CLIError(EXIT_DEGENERATE, f"degenerate metric: tetrahedron {exc.tet} is not realizable")


def cmd_mesh(args):
    if not (args.length > 0 and math.isfinite(args.length)):
        raise CLIError(EXIT_USAGE, "--length must be a positive number")
    tri = make_builtin(args.builtin)
    mesh = Mesh(tri, np.full(tri.num_edges, args.length), args.K, args.builtin)
    text = mesh_to_json(mesh)
    if args.output is None:
        sys.stdout.write(text)
        return 0
    try:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise CLIError(EXIT_IO, f"cannot write {args.output}: {exc}") from None
    return 0


def cmd_curvature(args):
    mesh = _load(args.mesh, args.K)
    try:
        R = ricci(mesh.tri, mesh.lengths, mesh.K)
    except DegenerateMetric as exc:
        raise _degenerate(exc) from None
    st = functionals(R, mesh.lengths)
    _emit({
        "K": mesh.K,
        "edges": mesh.tri.edges.tolist(),
        "R": R.tolist(),
        "S": st.S,
        "C": st.C,
        "lambda": st.lam,
        "einstein_residual": st.einstein_residual,
        "einstein_residual_abs": st.einstein_residual_abs,
        "flat_residual": st.ricci_flat_residual,
    })
    return 0


def cmd_laplacian(args):
    mesh = _load(args.mesh, args.K)
    try:
        lap = jacobian_L(mesh.tri, mesh.lengths, mesh.K, args.h_rel)
    except DegenerateMetric as exc:
        raise _degenerate(exc) from None
    except StepTooLarge as exc:
        raise CLIError(EXIT_DEGENERATE, str(exc)) from None
    show_all = not (args.spectrum or args.kernel or args.stability)
    out = {
        "K": mesh.K,
        "m": mesh.tri.num_edges,
        "asymmetry": lap.asymmetry,
        "euler_residual": lap.euler_residual,
        "left_euler_residual": lap.left_euler_residual,
    }
    if args.spectrum or show_all:
        eig = lap.eigenvalues()
        scale = float(np.max(np.abs(eig)))
        out["eigenvalues"] = eig.tolist()
        out["nonsingular"] = bool(np.min(np.abs(eig)) > 1e-7 * scale)
        out["indefinite"] = bool(eig.min() < -1e-7 * scale and eig.max() > 1e-7 * scale)
    if args.kernel or show_all:
        rk = rank_check(lap)
        out["rank"] = rk.rank
        out["corank_one"] = rk.corank_one
        out["kernel_alignment_with_l"] = rk.alignment
        out["kernel_aligned_with_l"] = rk.kernel_aligned_with_l
    if args.stability:
        try:
            rep = stability_check(mesh.lengths, lap)
        except NotEinstein as exc:
            out["stability"] = {"error": str(exc)}
        else:
            out["stability"] = {
                "lambda_de": rep.lambda_de,
                "max_eig_condition": rep.max_eig_condition,
                "first_eig_L": rep.first_eig_L,
                "first_eig_exceeds_lambda": rep.first_eig_exceeds_lambda,
                "satisfied": rep.satisfied,
            }
    _emit(out)
    return 0


def cmd_flow(args):
    mesh = _load(args.mesh, args.K)
    kind = FlowKind(args.flow)
    target = None
    if kind is FlowKind.NLCF:
        if args.target is None:
            raise CLIError(EXIT_USAGE, "--flow nlcf requires --target")
        tgt = _load(args.target, mesh.K)
        if tgt.tri.edges.tolist() != mesh.tri.edges.tolist():
            raise CLIError(EXIT_USAGE, "target mesh has a different edge set")
        try:
            target = ricci(tgt.tri, tgt.lengths, mesh.K)
        except DegenerateMetric:
            raise CLIError(EXIT_USAGE, "target metric is degenerate") from None
    try:
        cfg = FlowConfig(K=mesh.K, dt0=args.dt, dt_min=args.dt_min, t_max=args.t_max,
                         tol_converge=args.tol, h_rel=args.h_rel)
        l0 = perturb(mesh.lengths, args.perturb, np.random.default_rng(args.seed))
    except ValueError as exc:
        raise CLIError(EXIT_USAGE, str(exc)) from None

    start = time.perf_counter()
    try:
        res = run_flow(kind, mesh.tri, l0, cfg, target=target, seed=args.seed)
    except DegenerateMetric as exc:
        raise _degenerate(exc) from None
    wall = time.perf_counter() - start

    if args.trace:
        try:
            write_trace(args.trace, res.trace)
        except OSError as exc:
            raise CLIError(EXIT_IO, f"cannot write {args.trace}: {exc}") from None
    _emit({
        "flow": kind.value,
        "K": mesh.K,
        "status": res.status.value,
        "t": res.t,
        "steps": len(res.trace) - 1,
        "seed": args.seed,
        "einstein_residual": res.state.einstein_residual,
        "flat_residual": res.state.ricci_flat_residual,
        "lambda": res.state.lam,
        "message": res.message,
        "wall_time_s": wall,
        "lengths": res.l.tolist(),
    })
    if res.status.converged:
        return 0
    if res.status is FlowStatus.MAX_TIME_REACHED:
        return EXIT_MAX_TIME
    return EXIT_FLOW_FAILED


def cmd_verify(args):
    checks = run_suite(args.suite)
    ok = all(c.passed for c in checks)
    if args.format == "table":
        width = max(len(c.name) for c in checks)
        for c in checks:
            mark = "PASS" if c.passed else "FAIL"
            sys.stdout.write(f"{mark}  {c.name:<{width}}  value={c.value:.3e}  bound={c.bound:.3e}\n")
    else:
        _emit({"suite": args.suite, "passed": ok, "checks": [c.as_dict() for c in checks]})
    return 0 if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="plflow", description="Discrete curvature flows on triangulated 3-manifolds.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("mesh", help="write a builtin triangulation with constant edge length")
    s.add_argument("--builtin", required=True, choices=sorted(BUILTINS))
    s.add_argument("--length", type=float, default=math.pi / 2)
    s.add_argument("--K", type=float, default=0.0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_mesh)

    s = sub.add_parser("curvature", help="edge curvature and functionals")
    s.add_argument("mesh")
    s.add_argument("--K", type=float, default=None, help="override the mesh file's K")
    s.set_defaults(func=cmd_curvature)

    s = sub.add_parser("laplacian", help="finite-difference Laplacian diagnostics")
    s.add_argument("mesh")
    s.add_argument("--K", type=float, default=None)
    s.add_argument("--h-rel", type=float, default=1e-5)
    s.add_argument("--spectrum", action="store_true")
    s.add_argument("--kernel", action="store_true")
    s.add_argument("--stability", action="store_true")
    s.set_defaults(func=cmd_laplacian)

    s = sub.add_parser("flow", help="integrate a curvature flow")
    s.add_argument("mesh")
    s.add_argument("--flow", required=True, choices=[k.value for k in FlowKind])
    s.add_argument("--target", help="mesh whose curvature is the nlcf target")
    s.add_argument("--K", type=float, default=None)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--dt-min", type=float, default=1e-9)
    s.add_argument("--t-max", type=float, default=10.0)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--h-rel", type=float, default=1e-5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--perturb", type=float, default=0.0, help="multiplicative uniform noise amplitude")
    s.add_argument("--trace", help="CSV output path")
    s.set_defaults(func=cmd_flow)

    s = sub.add_parser("verify", help="run built-in verification suites")
    s.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    s.add_argument("--format", choices=["json", "table"], default="json")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        thread_count()
        return args.func(args)
    except CLIError as exc:
        sys.stderr.write(f"plflow: {exc}\n")
        return exc.code
    except ValueError as exc:
        # includes PLFLOW_THREADS and other argument validation
        sys.stderr.write(f"plflow: {exc}\n")
        return EXIT_USAGE
    except PLFlowError as exc:
        sys.stderr.write(f"plflow: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
