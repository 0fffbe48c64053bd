"""Lyapunov machinery: sum-of-antiderivatives certificate, gain/time bounds, trace audits.

The certificate is V(x) = sum over edges of the antiderivative of
sigma(sat(.)) evaluated at the edge mismatch.  Along flows with a
discontinuous-at-zero rule and a large enough gain, V decreases at rate at
least kappa*lambda_min*mu^2/2; phase-wrap jumps leave V unchanged (they
preserve every mismatch) and edge-unwind jumps strictly decrease it.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .coupling import CouplingSpec, antiderivative, sector_mu, sigma_sup_c
from .dynamics import HybridState, mismatch_vector
from .graph import GeneralGraph, smallest_btb_eigenvalue

WRAP_DEFECT_TOL = 1e-10


class AuditError(RuntimeError):
    """Raised when an audit cannot be performed (malformed trace)."""


def V(x: HybridState, graph: GeneralGraph, spec: CouplingSpec) -> float:
    """Certificate value at a state."""
    return float(np.sum(antiderivative(spec, mismatch_vector(x, graph))))


def v_bar(graph: GeneralGraph, spec: CouplingSpec) -> float:
    """Max of V over states reachable by flowing: every |mismatch| <= pi + delta."""
    return graph.n_edges * antiderivative(spec, spec.domain_limit)


def omega_bar(n_nodes: int, omega_min: float, omega_max: float) -> float:
    """Heterogeneity budget (n - 1) * (omega_max - omega_min)."""
    if omega_max < omega_min:
        raise ValueError("omega_max must be >= omega_min")
    return (n_nodes - 1) * (omega_max - omega_min)


def kappa_star(c: float, omega_bar_value: float, lambda_min: float, mu: float | None) -> float:
    """Sufficient gain 2*c*omega_bar / (lambda_min * mu^2) for finite-time sync.

    Requires a rule with a jump at the origin (mu > 0) and a tree (lambda_min
    > 0).  Zero heterogeneity gives kappa_star = 0: any positive gain works.
    """
    if mu is None or mu <= 0.0:
        raise ValueError("finite-time gain bound needs a coupling rule discontinuous at 0 (mu > 0)")
    if lambda_min <= 0.0:
        raise ValueError("finite-time gain bound needs a tree (lambda_min > 0)")
    return 2.0 * c * omega_bar_value / (lambda_min * mu**2)


def finite_time_bound(
    kappa: float,
    lambda_min: float,
    mu: float | None,
    v_bar_value: float,
    kappa_star_value: float | None = None,
) -> float:
    """Reach-time bound T = 2*v_bar / (kappa * lambda_min * mu^2).

    Warns if kappa is below the sufficient gain, in which case the bound is
    not guaranteed to hold.
    """
    if mu is None or mu <= 0.0:
        raise ValueError("finite-time bound needs mu > 0")
    if kappa <= 0.0 or lambda_min <= 0.0:
        raise ValueError("finite-time bound needs kappa > 0 and lambda_min > 0")
    if kappa_star_value is not None and kappa < kappa_star_value:
        warnings.warn(
            f"kappa = {kappa:.6g} is below the sufficient gain {kappa_star_value:.6g}; "
            "the reach-time bound is not guaranteed",
            stacklevel=2,
        )
    return 2.0 * v_bar_value / (kappa * lambda_min * mu**2)


@dataclass
class Constants:
    """Certificate constants derived from a graph, rule, and frequency bounds."""

    lambda_min: float
    c: float
    mu: float | None
    omega_bar: float
    v_bar: float
    kappa_star: float | None


def certificate_constants(
    graph: GeneralGraph,
    spec: CouplingSpec,
    omega_bounds: tuple[float, float],
) -> Constants:
    lam = getattr(graph, "lambda_min", None)
    if lam is None:
        lam = smallest_btb_eigenvalue(graph.incidence)
    c = sigma_sup_c(spec)
    mu = sector_mu(spec)
    wbar = omega_bar(graph.n_nodes, omega_bounds[0], omega_bounds[1])
    vb = v_bar(graph, spec)
    ks = None
    if mu is not None and lam > 0.0:
        ks = kappa_star(c, wbar, lam, mu)
    return Constants(lam, c, mu, wbar, vb, ks)


@dataclass
class LyapunovReport:
    """Audit of one solution trace against the certificate guarantees."""

    scenario_id: str
    sigma_family: str
    kappa: float
    lambda_min: float
    omega_bar: float
    kappa_star: float | None
    bound_T: float | None
    reach_tol: float
    reach_time: float | None
    synchronized: bool
    n_jumps: int
    n_edge_jumps: int
    n_wrap_jumps: int
    max_wrap_defect: float
    max_edge_delta: float        # most positive edge-jump V change (must be < 0)
    flow_violations: int
    flow_checked: int
    worst_flow_slope: float | None
    passed: bool
    notes: list[str] = field(default_factory=list)

    def to_text(self) -> str:
        def fmt(v):
            if v is None:
                return "n/a"
            if isinstance(v, float):
                return f"{v:.12g}"
            return str(v)

        keys = [
            ("scenario", self.scenario_id),
            ("sigma_family", self.sigma_family),
            ("kappa", self.kappa),
            ("lambda_min", self.lambda_min),
            ("omega_bar", self.omega_bar),
            ("kappa_star", self.kappa_star),
            ("bound_T", self.bound_T),
            ("reach_tol", self.reach_tol),
            ("reach_time", self.reach_time),
            ("synchronized", self.synchronized),
            ("jumps_total", self.n_jumps),
            ("jumps_edge", self.n_edge_jumps),
            ("jumps_wrap", self.n_wrap_jumps),
            ("max_wrap_defect", self.max_wrap_defect),
            ("max_edge_delta_v", self.max_edge_delta),
            ("flow_slope_violations", self.flow_violations),
            ("flow_windows_checked", self.flow_checked),
            ("worst_flow_slope", self.worst_flow_slope),
            ("passed", self.passed),
        ]
        lines = [f"{k}: {fmt(v)}" for k, v in keys]
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines)

    def summary_row(self) -> dict:
        return {
            "scenario": self.scenario_id,
            "kappa": self.kappa,
            "sigma_family": self.sigma_family,
            "lambda_min": self.lambda_min,
            "omega_bar": self.omega_bar,
            "kappa_star": "" if self.kappa_star is None else self.kappa_star,
            "bound_T": "" if self.bound_T is None else self.bound_T,
            "reach_time": "" if self.reach_time is None else self.reach_time,
            "max_jump_defect": self.max_wrap_defect,
            "flow_violations": self.flow_violations,
        }


def audit_trace(trace, scenario, slope_window_steps: int = 5) -> LyapunovReport:
    """Audit a solution trace: jump non-increase, flow decrease, reach time.

    Jump checks apply to every trace.  The flow-slope check (central
    differences over a window of ~5 integration steps, compared against
    -kappa*lambda_min*mu^2/2 with a 1% relative slack) applies only when the
    rule is discontinuous at the origin and kappa >= kappa_star, which is
    when the decrease rate is guaranteed.
    """
    graph = scenario.graph
    spec = scenario.coupling
    kappa = scenario.kappa
    consts = certificate_constants(graph, spec, scenario.omega_bounds)

    notes: list[str] = []
    # jump audits: recompute V from the stored pre/post states
    max_wrap = 0.0
    max_edge = -math.inf
    n_edge = n_wrap = 0
    edge_ok = True
    for ev in trace.jump_events:
        dv = V(ev.post, graph, spec) - V(ev.pre, graph, spec)
        if ev.kind == "wrap":
            n_wrap += 1
            max_wrap = max(max_wrap, abs(dv))
        else:
            n_edge += 1
            max_edge = max(max_edge, dv)
            if dv >= 0.0:
                edge_ok = False
    if n_edge == 0:
        max_edge = -math.inf

    # reach time at the mode-appropriate tolerance
    reach_tol = trace.reach_tolerance
    reach_time = None
    mis = trace.mismatch_inf
    below = np.flatnonzero(mis <= reach_tol)
    if below.size:
        reach_time = float(trace.times[below[0]])
    synchronized = bool(mis[-1] <= reach_tol)

    # flow slope audit (guaranteed regime only)
    flow_violations = 0
    flow_checked = 0
    worst_slope = None
    bound_T = None
    if consts.mu is not None and consts.lambda_min > 0.0:
        bound_T = finite_time_bound(
            kappa, consts.lambda_min, consts.mu, consts.v_bar, None
        )
        if consts.kappa_star is not None and kappa >= consts.kappa_star:
            rate = 0.5 * kappa * consts.lambda_min * consts.mu**2
            slope_tol = 1e-2 * kappa * consts.lambda_min * consts.mu**2
            w = max(1, slope_window_steps // 2)
            t = trace.times
            j = trace.jump_counters
            v = trace.V_values
            band = reach_tol
            samples = trace.samples
            for k in range(w, len(t) - w):
                if j[k - w] != j[k + w]:
                    continue  # window straddles a jump
                if t[k + w] - t[k - w] <= 0:
                    continue
                if mis[k] <= band:
                    continue  # inside the chatter/sliding band: no decrease guarantee
                if any(samples[i].sliding for i in range(k - w, k + w + 1)):
                    continue  # equivalent control replaces the rule: rate no longer applies
                slope = (v[k + w] - v[k - w]) / (t[k + w] - t[k - w])
                flow_checked += 1
                if worst_slope is None or slope > worst_slope:
                    worst_slope = slope
                if slope > -rate + slope_tol:
                    flow_violations += 1

    passed = edge_ok and max_wrap <= WRAP_DEFECT_TOL and flow_violations == 0
    if not synchronized:
        notes.append("trajectory did not synchronize to the reach tolerance by the final time")
    if consts.lambda_min <= 0.0:
        notes.append("communication graph is not a tree (lambda_min = 0); no convergence guarantee")
    if bound_T is not None and consts.kappa_star is not None and kappa < consts.kappa_star:
        notes.append("kappa below sufficient gain; reach-time bound informational only")

    return LyapunovReport(
        scenario_id=scenario.scenario_id,
        sigma_family=spec.family,
        kappa=kappa,
        lambda_min=consts.lambda_min,
        omega_bar=consts.omega_bar,
        kappa_star=consts.kappa_star,
        bound_T=bound_T,
        reach_tol=reach_tol,
        reach_time=reach_time,
        synchronized=synchronized,
        n_jumps=len(trace.jump_events),
        n_edge_jumps=n_edge,
        n_wrap_jumps=n_wrap,
        max_wrap_defect=max_wrap,
        max_edge_delta=max_edge,
        flow_violations=flow_violations,
        flow_checked=flow_checked,
        worst_flow_slope=worst_slope,
        passed=passed,
        notes=notes,
    )
