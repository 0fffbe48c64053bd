"""Hybrid integrator: fixed-step RK4 flows, event-located jumps, sliding modes.

Jumps execute before flows whenever the state sits in a jump set; multiple
simultaneously enabled jumps run sequentially within one time instant (edge
unwinds first, then phase wraps, lowest index first), each advancing the jump
counter by one.  Boundary crossings during a flow step are located on the
step's linear interpolant, which is exact for the affine mismatch/phase
thresholds, then nudged to the jump-enabled side.

Two treatments of a discontinuous coupling rule near the synchronization set:

- "chatter" (default): plain RK4 through the discontinuity; the mismatch
  rattles inside a band of width about 2*kappa*c*sqrt(m)*step_h.
- "equivalent_control": once the mismatch enters sliding_band and the
  equivalent control sits inside the regularized interval at 0, the coupling
  switches to the equivalent control plus a hull-clipped contraction term
  that pulls the mismatch to zero (machine precision) and freezes it there.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coupling import CouplingSpec, eval_sigma, jump_at_zero, sigma_sup_c
from .dynamics import (
    HybridState,
    JumpEvent,
    TWO_PI,
    jump_edge,
    jump_wrap,
    mismatch_vector,
)
from .graph import GeneralGraph

SLIDING_LOCK_TOL = 1e-9


class IntegratorError(RuntimeError):
    """Raised for integration diagnostics (Zeno guard, state escape, bad config)."""


@dataclass
class IntegratorConfig:
    step_h: float = 1e-3
    event_tol: float = 1e-9          # time resolution for boundary location
    max_jumps: int = 100_000
    sliding_mode: str = "chatter"    # "chatter" or "equivalent_control"
    sliding_band: float = 0.0        # mismatch norm enabling equivalent control
    sliding_pull: float | None = None  # contraction rate; default 0.2/step_h
    t_end: float | None = None       # overrides the scenario's horizon
    escape_tol: float = 1e-6         # max tolerated overshoot of |theta| past pi+delta

    def __post_init__(self):
        if self.step_h <= 0.0:
            raise IntegratorError("step_h must be positive")
        if not (0.0 < self.event_tol < self.step_h):
            raise IntegratorError("event_tol must lie in (0, step_h)")
        if self.sliding_mode not in ("chatter", "equivalent_control"):
            raise IntegratorError(f"unknown sliding mode {self.sliding_mode!r}")


@dataclass
class Sample:
    t: float
    j: int
    theta: np.ndarray
    q: np.ndarray
    aux: np.ndarray | None
    V: float
    mismatch_inf: float
    event: str = ""      # "", "edge:i-j", "wrap:i" (set on post-jump rows)
    sliding: bool = False


@dataclass
class SolutionTrace:
    """Recorded solution: one sample per accepted step plus pre/post jump rows."""

    graph: GeneralGraph
    coupling: CouplingSpec
    kappa: float
    step_h: float
    sliding_mode: str
    samples: list[Sample] = field(default_factory=list)
    jump_events: list[JumpEvent] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def jump_counters(self) -> np.ndarray:
        return np.array([s.j for s in self.samples])

    @property
    def V_values(self) -> np.ndarray:
        return np.array([s.V for s in self.samples])

    @property
    def mismatch_inf(self) -> np.ndarray:
        return np.array([s.mismatch_inf for s in self.samples])

    @property
    def chatter_band(self) -> float:
        """Half-heuristic mismatch band for chattering: 2*kappa*c*sqrt(m)*step_h."""
        c = sigma_sup_c(self.coupling)
        return 2.0 * self.kappa * c * math.sqrt(max(self.graph.n_edges, 1)) * self.step_h

    @property
    def reach_tolerance(self) -> float:
        """Mismatch tolerance defining 'reached': the chatter band, or 1e-9
        under equivalent-control sliding."""
        if self.sliding_mode == "equivalent_control":
            return SLIDING_LOCK_TOL
        return self.chatter_band

    def final_state(self) -> HybridState:
        s = self.samples[-1]
        return HybridState(s.theta.copy(), s.q.copy(), None if s.aux is None else s.aux.copy())

    def mismatch_inf_at(self, t: float) -> float:
        idx = int(np.searchsorted(self.times, t - 1e-12))
        idx = min(idx, len(self.samples) - 1)
        return self.samples[idx].mismatch_inf


@dataclass
class DwellStats:
    """Average dwell-time envelope for the jumps of a trace.

    Jump counts satisfy  j(t) - j(s) <= (t - s)/tau_d + j0  over the trace.
    tau_d is +inf when the trace has no jumps or too few to bind.
    """

    tau_d: float
    j0: int
    n_jumps: int


def detect_boundary(
    theta0: np.ndarray,
    theta1: np.ndarray,
    q: np.ndarray,
    graph: GeneralGraph,
    delta: float,
    event_frac_tol: float,
):
    """First threshold crossing on the segment theta(a) = theta0 + a*(theta1-theta0).

    Thresholds: |mismatch_ell| = pi + delta (edge events) and |theta_i| =
    pi + delta (wrap events).  Returns (fraction, kind, index) for the
    earliest crossing, preferring edge events within event_frac_tol of a tie,
    or None when the whole step stays interior.  The mismatch is affine in a,
    so roots are exact up to rounding.
    """
    L = math.pi + delta
    B = graph.incidence
    cands: list[tuple[float, int, int]] = []  # (fraction, kind_rank, index)

    def add_crossings(v0: np.ndarray, v1: np.ndarray, kind_rank: int):
        dv = v1 - v0
        for idx in range(len(v0)):
            if abs(v1[idx]) < L:
                continue
            for target in (L, -L):
                d = dv[idx]
                if d == 0.0:
                    continue
                a = (target - v0[idx]) / d
                if 0.0 < a <= 1.0 and abs(v0[idx] + a * d) >= L - 1e-12:
                    cands.append((a, kind_rank, idx))

    mis0 = B.T @ theta0 + TWO_PI * q
    mis1 = B.T @ theta1 + TWO_PI * q
    add_crossings(mis0, mis1, 0)
    add_crossings(theta0, theta1, 1)
    if not cands:
        return None
    a_min = min(c[0] for c in cands)
    # edge priority within the tie window, then lowest index
    window = [c for c in cands if c[0] <= a_min + event_frac_tol]
    window.sort(key=lambda c: (c[1], c[2], c[0]))
    a, kind_rank, idx = window[0]
    return a, ("edge" if kind_rank == 0 else "wrap"), idx


def dwell_stats(trace: SolutionTrace) -> DwellStats:
    """Fit the tightest average dwell-time envelope to a trace's jump times."""
    times = np.array([ev.t for ev in trace.jump_events])
    n = len(times)
    if n == 0:
        return DwellStats(math.inf, 0, 0)
    # j0 covers the largest burst of jumps at a single time instant
    _, counts = np.unique(times, return_counts=True)
    j0 = int(counts.max())
    # envelope rate over all jump pairs (plus the trace endpoints)
    t_pts = np.concatenate(([trace.samples[0].t], times, [trace.samples[-1].t]))
    j_pts = np.concatenate(([0.0], np.arange(1, n + 1), [float(n)]))
    rate = 0.0
    for a in range(len(t_pts)):
        dj = j_pts[a + 1 :] - j_pts[a] - j0
        dt = t_pts[a + 1 :] - t_pts[a]
        mask = dj > 0
        if np.any(mask):
            with np.errstate(divide="ignore"):
                rate = max(rate, float(np.max(dj[mask] / dt[mask])))
    tau_d = math.inf if rate == 0.0 else 1.0 / rate
    return DwellStats(tau_d, j0, n)


class _EquivalentControl:
    """Equivalent-control sliding logic for rules discontinuous at the origin."""

    def __init__(self, graph, spec, kappa, band, pull):
        self.B = graph.incidence
        self.BtB = self.B.T @ self.B
        self.kappa = kappa
        self.band = band
        self.pull = pull
        self.hull = jump_at_zero(spec)
        self.engaged = False

    def sigma_eq(self, omega: np.ndarray) -> np.ndarray:
        return np.linalg.solve(self.kappa * self.BtB, self.B.T @ omega)

    def feasible(self, omega: np.ndarray) -> bool:
        return bool(np.max(np.abs(self.sigma_eq(omega))) <= self.hull + 1e-12)

    def update(self, mis_inf: float, omega: np.ndarray):
        if self.engaged:
            if not self.feasible(omega):
                self.engaged = False
        elif mis_inf <= self.band and self.feasible(omega):
            self.engaged = True

    def sigma(self, mis: np.ndarray, omega: np.ndarray) -> np.ndarray:
        """Equivalent control plus a hull-clipped pull toward zero mismatch."""
        sig = self.sigma_eq(omega)
        sig = sig + (self.pull / self.kappa) * np.linalg.solve(self.BtB, mis)
        return np.clip(sig, -self.hull, self.hull)


def simulate(scenario, cfg: IntegratorConfig | None = None) -> SolutionTrace:
    """Integrate a scenario over [0, t_end] in hybrid time.

    Raises IntegratorError when the jump budget is exhausted (suggesting a
    Zeno-like accumulation / smaller step) or the state escapes the phase box
    by more than escape_tol (suggesting a smaller step).
    """
    cfg = cfg or IntegratorConfig()
    graph: GeneralGraph = scenario.graph
    spec: CouplingSpec = scenario.coupling
    kappa = float(scenario.kappa)
    delta = spec.delta
    L = math.pi + delta
    B = graph.incidence
    t_end = float(cfg.t_end if cfg.t_end is not None else scenario.t_end)
    breakpoints = sorted(b for b in getattr(scenario, "time_breakpoints", ()) if 0.0 < b < t_end)

    from .lyapunov import V as lyap_V  # local import to avoid a module cycle

    slider = None
    if cfg.sliding_mode == "equivalent_control":
        if jump_at_zero(spec) <= 0.0:
            raise IntegratorError(
                "equivalent_control sliding needs a rule discontinuous at the origin"
            )
        if getattr(graph, "lambda_min", 0.0) <= 0.0:
            raise IntegratorError("equivalent_control sliding needs a tree communication graph")
        pull = cfg.sliding_pull if cfg.sliding_pull is not None else 0.2 / cfg.step_h
        band = cfg.sliding_band
        if band <= 0.0:
            # default: engage once chatter could hold the state, with headroom
            band = 2.0 * kappa * sigma_sup_c(spec) * math.sqrt(graph.n_edges) * cfg.step_h * 2.0
        slider = _EquivalentControl(graph, spec, kappa, band, pull)

    trace = SolutionTrace(graph, spec, kappa, cfg.step_h, cfg.sliding_mode)
    x = scenario.initial_state()
    if np.any(np.abs(x.theta) > L + 1e-12):
        raise IntegratorError("initial phases lie outside the state space")
    t = 0.0
    j = 0

    def omega_of(theta, aux, tt):
        return scenario.omega(theta, aux, tt)

    def record(event: str = "", sliding: bool = False):
        mis = mismatch_vector(x, graph)
        trace.samples.append(
            Sample(
                t,
                j,
                x.theta.copy(),
                x.q.copy(),
                None if x.aux is None else x.aux.copy(),
                lyap_V(x, graph, spec),
                float(np.max(np.abs(mis), initial=0.0)),
                event,
                sliding,
            )
        )

    def deriv(theta, aux, tt):
        omega = omega_of(theta, aux, tt)
        mis = B.T @ theta + TWO_PI * x.q
        if slider is not None and slider.engaged:
            sig = slider.sigma(mis, omega)
        else:
            sig = eval_sigma(spec, np.clip(mis, -L, L))
        dtheta = omega - kappa * (B @ sig)
        daux = None
        if aux is not None:
            daux = scenario.aux_rhs(theta, aux, tt)
        return dtheta, daux

    def record_pre():
        # skip if the current (t, j) row was already written after the last step
        if trace.samples and trace.samples[-1].t == t and trace.samples[-1].j == j:
            return
        record("", slider.engaged if slider else False)

    def drain_jumps():
        """Execute every jump enabled at the current instant, in priority order."""
        nonlocal x, j
        while True:
            mis = mismatch_vector(x, graph)
            edge_hits = np.flatnonzero(np.abs(mis) >= L - 1e-12)
            if edge_hits.size:
                ell = int(edge_hits[0])
                if j >= cfg.max_jumps:
                    raise IntegratorError(
                        f"jump budget max_jumps={cfg.max_jumps} exhausted at t={t:.6g}; "
                        "possible Zeno accumulation, try a smaller step_h"
                    )
                i_lab, j_lab = graph.edges[ell]
                pre = x.copy()
                posts = jump_edge(x, ell, delta, graph)
                record_pre()
                x = posts[0].copy()
                ev = JumpEvent("edge", f"edge:{i_lab}-{j_lab}", t, j, pre, posts, 0)
                trace.jump_events.append(ev)
                j += 1
                record(ev.label, slider.engaged if slider else False)
                continue
            wrap_hits = np.flatnonzero(np.abs(x.theta) >= L - 1e-12)
            if wrap_hits.size:
                node = int(wrap_hits[0]) + 1
                if j >= cfg.max_jumps:
                    raise IntegratorError(
                        f"jump budget max_jumps={cfg.max_jumps} exhausted at t={t:.6g}; "
                        "possible Zeno accumulation, try a smaller step_h"
                    )
                # land exactly on the boundary so the wrap is exact
                x.theta[node - 1] = math.copysign(L, x.theta[node - 1])
                pre = x.copy()
                post = jump_wrap(x, node, delta, graph)
                record_pre()
                x = post.copy()
                ev = JumpEvent("wrap", f"wrap:{node}", t, j, pre, [post], 0)
                trace.jump_events.append(ev)
                j += 1
                record(ev.label, slider.engaged if slider else False)
                continue
            return

    record()
    frac_tol = cfg.event_tol / cfg.step_h
    next_bp = 0

    while True:
        drain_jumps()
        if t >= t_end - 1e-12:
            break
        h = min(cfg.step_h, t_end - t)
        while next_bp < len(breakpoints) and breakpoints[next_bp] <= t + 1e-12:
            next_bp += 1
        if next_bp < len(breakpoints):
            h = min(h, breakpoints[next_bp] - t)

        if slider is not None:
            mis_inf = float(np.max(np.abs(mismatch_vector(x, graph))))
            slider.update(mis_inf, omega_of(x.theta, x.aux, t))

        theta0, aux0 = x.theta, x.aux
        k1t, k1a = deriv(theta0, aux0, t)
        k2t, k2a = deriv(theta0 + 0.5 * h * k1t, _ax(aux0, k1a, 0.5 * h), t + 0.5 * h)
        k3t, k3a = deriv(theta0 + 0.5 * h * k2t, _ax(aux0, k2a, 0.5 * h), t + 0.5 * h)
        k4t, k4a = deriv(theta0 + h * k3t, _ax(aux0, k3a, h), t + h)
        theta1 = theta0 + (h / 6.0) * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
        aux1 = None
        if aux0 is not None:
            aux1 = aux0 + (h / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)

        hit = detect_boundary(theta0, theta1, x.q, graph, delta, frac_tol)
        if hit is not None:
            a, kind, idx = hit
            x.theta = theta0 + a * (theta1 - theta0)
            if aux0 is not None:
                x.aux = aux0 + a * (aux1 - aux0)
            t += a * h
            if kind == "wrap":
                x.theta[idx] = math.copysign(L, x.theta[idx])
        else:
            x.theta = theta1
            x.aux = aux1
            t += h
        if np.any(np.abs(x.theta) > L + cfg.escape_tol):
            raise IntegratorError(
                f"phase escaped the state space by more than {cfg.escape_tol} at "
                f"t={t:.6g}; try a smaller step_h"
            )
        record("", slider.engaged if slider else False)

    return trace


def _ax(aux, k, scale):
    if aux is None:
        return None
    return aux + scale * k


def reach_time(trace: SolutionTrace, tol: float | None = None) -> float | None:
    """First time the mismatch norm falls to tol (default: the trace's own tolerance)."""
    tol = trace.reach_tolerance if tol is None else tol
    mis = trace.mismatch_inf
    below = np.flatnonzero(mis <= tol)
    if below.size == 0:
        return None
    return float(trace.times[below[0]])
