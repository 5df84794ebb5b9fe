"""Discrete curvature flows integrated with classic RK4.

Four flow fields are available:

``crf``   l' = -R
``ncrf``  l' = -R + lambda l,        lambda = S / |l|^2
``lcf``   l' = -L^T R                (gradient flow of |R|^2 / 2)
``nlcf``  l' = L^T (R_target - R)

Each step is checked for degeneracy and for the Lyapunov quantity of the
flow; a failed step is retried with half the step size until ``dt_min``.
"""
from __future__ import annotations

import enum
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .complex import Triangulation
from .curvature import CurvatureState, functionals, jacobian_L, ricci
from .errors import (
    DegenerateMetric,
    DimensionMismatch,
    MissingSnapshots,
    PLFlowError,
    TraceTooShort,
)
from .geometry import degeneracy_margin, metric_nondegenerate

__all__ = [
    "FlowKind",
    "FlowConfig",
    "FlowStatus",
    "TraceRecord",
    "FlowTrace",
    "FlowResult",
    "MonitorReport",
    "ProbeResult",
    "flow_field",
    "run_flow",
    "monitors",
    "sk_relative",
    "perturb",
    "attractor_probe",
    "thread_count",
]


class FlowKind(str, enum.Enum):
    CRF = "crf"
    NCRF = "ncrf"
    LCF = "lcf"
    NLCF = "nlcf"


class FlowStatus(str, enum.Enum):
    CONVERGED_EINSTEIN = "ConvergedEinstein"
    CONVERGED_FLAT = "ConvergedFlat"
    DEGENERATED = "Degenerated"
    STEP_UNDERFLOW = "StepUnderflow"
    MAX_TIME_REACHED = "MaxTimeReached"

    @property
    def converged(self) -> bool:
        return self in (FlowStatus.CONVERGED_EINSTEIN, FlowStatus.CONVERGED_FLAT)


@dataclass
class FlowConfig:
    K: float = 0.0
    dt0: float = 1e-3
    dt_min: float = 1e-9
    t_max: float = 10.0
    tol_converge: float = 1e-8
    tol_mono: float = 1e-10
    h_rel: float = 1e-5
    stop_on_converge: bool = True
    guard_monitor: bool = True  # halve the step when the Lyapunov quantity increases

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt0):
            raise ValueError(f"need 0 < dt_min <= dt0, got dt_min={self.dt_min}, dt0={self.dt0}")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")


@dataclass
class TraceRecord:
    t: float
    S: float
    C: float
    lam: float
    einstein_residual: float
    flat_residual: float
    norm_l_sq: float
    margin: float
    dt: float
    SK_rel: float
    C_target: float | None = None
    l: np.ndarray | None = field(default=None, repr=False)
    R: np.ndarray | None = field(default=None, repr=False)


@dataclass
class FlowTrace:
    kind: FlowKind
    K: float
    seed: int | None = None
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)


@dataclass
class FlowResult:
    status: FlowStatus
    l: np.ndarray
    state: CurvatureState
    trace: FlowTrace
    t: float
    message: str = ""


def _lyapunov(kind: FlowKind, K: float):
    """Name of the TraceRecord attribute that must not increase, or None."""
    if kind is FlowKind.CRF:
        return "S" if K == 0 else "SK_rel"
    if kind is FlowKind.NCRF:
        return "lam" if K == 0 else None
    if kind is FlowKind.LCF:
        return "C"
    return "C_target"


def _convergence_target(kind: FlowKind, K: float) -> str:
    if kind is FlowKind.CRF:
        return "flat"
    if kind is FlowKind.LCF and K != 0:
        return "flat"
    return "einstein"


def _field(kind, tri, l, K, h_rel, target):
    if kind in (FlowKind.CRF, FlowKind.NCRF):
        R = ricci(tri, l, K)
        if kind is FlowKind.CRF:
            return -R, R
        return -R + (R @ l) / (l @ l) * l, R
    lap = jacobian_L(tri, l, K, h_rel)
    R, Ls = lap.R, lap.sym
    if kind is FlowKind.LCF:
        return -Ls.T @ R, R
    return Ls.T @ (target - R), R


def flow_field(kind, tri: Triangulation, l, K: float = 0.0, h_rel: float = 1e-5,
               target=None) -> np.ndarray:
    """Velocity l' of the given flow at metric ``l``."""
    kind = FlowKind(kind)
    l = np.asarray(l, dtype=float)
    if kind is FlowKind.NLCF:
        if target is None:
            raise ValueError("nlcf needs a target curvature vector")
        target = np.asarray(target, dtype=float)
        if target.shape != l.shape:
            raise DimensionMismatch(f"target has shape {target.shape}, metric has {l.shape}")
    return _field(kind, tri, l, K, h_rel, target)[0]


def _record(t, l, R, K, tri, dt, sk_rel, target, margin=None) -> TraceRecord:
    st = functionals(R, l)
    return TraceRecord(
        t=t, S=st.S, C=st.C, lam=st.lam,
        einstein_residual=st.einstein_residual,
        flat_residual=st.ricci_flat_residual,
        norm_l_sq=float(l @ l),
        margin=degeneracy_margin(tri, l, K) if margin is None else margin,
        dt=dt, SK_rel=sk_rel,
        C_target=None if target is None else float((target - R) @ (target - R)),
        l=l.copy(), R=R.copy(),
    )


def _converged(rec: TraceRecord, goal: str, tol: float):
    if goal == "flat":
        return FlowStatus.CONVERGED_FLAT if rec.flat_residual < tol else None
    return FlowStatus.CONVERGED_EINSTEIN if rec.einstein_residual < tol else None


def run_flow(kind, tri: Triangulation, l0, cfg: FlowConfig | None = None, target=None,
             seed: int | None = None) -> FlowResult:
    """Integrate a flow from ``l0`` until convergence, degeneration or ``t_max``.

    Failure modes are reported through ``FlowResult.status``; nothing is
    raised for a flow that leaves the space of nondegenerate metrics.
    """
    kind = FlowKind(kind)
    cfg = cfg or FlowConfig()
    K = cfg.K
    l = np.array(l0, dtype=float)
    if kind is FlowKind.NLCF:
        if target is None:
            raise ValueError("nlcf needs a target curvature vector")
        target = np.asarray(target, dtype=float)
        if target.shape != l.shape:
            raise DimensionMismatch(f"target has shape {target.shape}, metric has {l.shape}")
    else:
        target = None
    if kind in (FlowKind.NCRF, FlowKind.NLCF) and K != 0:
        warnings.warn(f"{kind.value} with K != 0 is experimental", stacklevel=2)

    ok, bad = metric_nondegenerate(tri, l, K)
    if not ok:
        raise DegenerateMetric(bad, f"initial metric is degenerate at tetrahedron {bad}")

    trace = FlowTrace(kind=kind, K=K, seed=seed)
    goal = _convergence_target(kind, K)
    mono = _lyapunov(kind, K)

    def F(x):
        return _field(kind, tri, x, K, cfg.h_rel, target)

    t = 0.0
    k1, R = F(l)
    rec = _record(t, l, R, K, tri, 0.0, 0.0, target)
    trace.records.append(rec)

    def finish(status, msg=""):
        return FlowResult(status, l.copy(), functionals(R, l), trace, t, msg)

    if cfg.stop_on_converge and (st := _converged(rec, goal, cfg.tol_converge)):
        return finish(st)

    dt = cfg.dt0
    t_eps = 1e-12 * cfg.t_max
    while t < cfg.t_max - t_eps:
        h = min(dt, cfg.t_max - t)
        reason = None
        try:
            k2, _ = F(l + 0.5 * h * k1)
            k3, _ = F(l + 0.5 * h * k2)
            k4, _ = F(l + h * k3)
            l_new = l + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(l_new)) or np.any(l_new <= 0):
                raise DegenerateMetric(-1, "nonpositive length")
            margin = degeneracy_margin(tri, l_new, K)
            ok, _ = metric_nondegenerate(tri, l_new, K)
            if not ok:
                raise DegenerateMetric(-1)
            k1_new, R_new = F(l_new)
        except PLFlowError:
            reason = "degenerate"
        else:
            sk_rel = rec.SK_rel + 0.5 * float((R + R_new) @ (l_new - l))
            new = _record(t + h, l_new, R_new, K, tri, h, sk_rel, target, margin)
            if cfg.guard_monitor and mono is not None:
                old_v, new_v = getattr(rec, mono), getattr(new, mono)
                if new_v - old_v > cfg.tol_mono * (1.0 + abs(old_v)):
                    reason = "monitor"

        if reason is not None:
            dt = 0.5 * h
            if dt < cfg.dt_min:
                if reason == "degenerate":
                    return finish(FlowStatus.DEGENERATED, f"metric degenerates near t={t:.6g}")
                return finish(FlowStatus.STEP_UNDERFLOW, f"{mono} increases for every step >= dt_min at t={t:.6g}")
            continue

        t, l, R, k1, rec = t + h, l_new, R_new, k1_new, new
        trace.records.append(rec)
        if cfg.stop_on_converge and (st := _converged(rec, goal, cfg.tol_converge)):
            return finish(st)
        dt = min(cfg.dt0, 2.0 * dt)

    final = _converged(rec, goal, cfg.tol_converge)
    return finish(final or FlowStatus.MAX_TIME_REACHED)


def sk_relative(trace: FlowTrace) -> np.ndarray:
    """S_K(t) - S_K(0) by trapezoidal quadrature of R . dl along the trace."""
    if any(r.l is None or r.R is None for r in trace.records):
        raise MissingSnapshots("trace records need full l and R snapshots")
    out = np.zeros(len(trace.records))
    for n in range(1, len(trace.records)):
        a, b = trace.records[n - 1], trace.records[n]
        out[n] = out[n - 1] + 0.5 * float((a.R + b.R) @ (b.l - a.l))
    return out


@dataclass
class MonitorReport:
    kind: FlowKind
    max_increase: dict  # claim -> largest increase between consecutive records
    passed: dict  # claim -> all increases within slack
    norm_drift: float | None  # NCRF only: max relative change of |l|^2

    @property
    def ok(self) -> bool:
        return all(self.passed.values())


def monitors(trace: FlowTrace, kind=None, slack: float = 1e-10) -> MonitorReport:
    """Check every monotonicity claim that applies to the flow of ``trace``.

    crf: S (K = 0) and S_K - S_K(0) nonincreasing; ncrf (K = 0): S and
    lambda nonincreasing; lcf: |R|^2 nonincreasing; nlcf: |R_target - R|^2
    nonincreasing.
    """
    kind = FlowKind(kind or trace.kind)
    if len(trace) < 2:
        raise TraceTooShort("need at least two records")
    K = trace.K
    series = {}
    if kind is FlowKind.CRF:
        if K == 0:
            series["S"] = trace.column("S")
        series["SK_rel"] = sk_relative(trace)
    elif kind is FlowKind.NCRF:
        if K == 0:
            series["S"] = trace.column("S")
            series["lambda"] = trace.column("lam")
    elif kind is FlowKind.LCF:
        series["C"] = trace.column("C")
    else:
        series["C_target"] = trace.column("C_target")

    inc, passed = {}, {}
    for name, v in series.items():
        d = np.diff(v)
        inc[name] = float(max(d.max(), 0.0))
        passed[name] = bool(np.all(d <= slack * (1.0 + np.abs(v[:-1]))))
    drift = None
    if kind is FlowKind.NCRF:
        n = trace.column("norm_l_sq")
        drift = float(np.max(np.abs(n - n[0])) / n[0])
    return MonitorReport(kind, inc, passed, drift)


def perturb(l, amp: float, rng: np.random.Generator) -> np.ndarray:
    """Multiplicative uniform noise in [1 - amp, 1 + amp] per edge."""
    l = np.asarray(l, dtype=float)
    if not 0 <= amp < 1:
        raise ValueError(f"perturbation amplitude must be in [0, 1), got {amp}")
    return l * rng.uniform(1.0 - amp, 1.0 + amp, size=l.shape)


def thread_count() -> int:
    raw = os.environ.get("PLFLOW_THREADS")
    if raw is None:
        return 1
    n = int(raw)
    if n < 1:
        raise ValueError(f"PLFLOW_THREADS must be a positive integer, got {raw!r}")
    return n


@dataclass
class ProbeResult:
    success_rate: float
    worst_residual: float
    results: list

    @property
    def statuses(self):
        return [r.status for r in self.results]


def attractor_probe(kind, tri: Triangulation, l_de, cfg: FlowConfig, n_trials: int, noise: float,
                    seed: int = 0, target=None) -> ProbeResult:
    """Run ``n_trials`` flows from independently perturbed copies of ``l_de``.

    Trial i draws its noise from a generator seeded with (seed, i), so the
    outcome does not depend on execution order or thread count. For nlcf
    the target defaults to the curvature of ``l_de``.
    """
    kind = FlowKind(kind)
    l_de = np.asarray(l_de, dtype=float)
    if kind is FlowKind.NLCF and target is None:
        target = ricci(tri, l_de, cfg.K)
    goal = _convergence_target(kind, cfg.K)

    def trial(i):
        rng = np.random.default_rng([seed, i])
        return run_flow(kind, tri, perturb(l_de, noise, rng), cfg, target=target, seed=seed)

    workers = min(thread_count(), max(n_trials, 1))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(trial, range(n_trials)))
    else:
        results = [trial(i) for i in range(n_trials)]

    def residual(res):
        return res.state.ricci_flat_residual if goal == "flat" else res.state.einstein_residual

    ok = sum(r.status.converged for r in results)
    worst = max((residual(r) for r in results), default=0.0)
    return ProbeResult(ok / n_trials if n_trials else 1.0, worst, results)
