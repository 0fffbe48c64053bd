"""Hybrid model of the coupled oscillator network.

State x = (theta, q): phases theta_i in [-(pi+delta), pi+delta] for nodes
i = 1..n and logic variables q_ell in {-1, 0, 1}, one per communication edge.
The per-edge phase mismatch is

    mismatch = B^T theta + 2*pi*q

with B the oriented incidence matrix.  Flows keep q constant and steer theta;
two jump families keep the state bounded without a leader:

- edge unwind: when |mismatch_ell| reaches pi + delta, q_ell is reset to the
  integer that minimizes |theta_j - theta_i + 2*h*pi| over h in {-1, 0, 1}
  (set-valued at exact ties);
- phase wrap: when |theta_i| reaches pi + delta and no edge jump is strictly
  enabled, theta_i is shifted by -sign(theta_i)*2*pi and the q of every
  incident edge absorbs the shift, so every mismatch is preserved exactly.

Optional auxiliary states (e.g. second-order frequencies) ride along: flows
integrate them via scenario-supplied dynamics and jumps pass them through
unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coupling import CouplingSpec, eval_sigma
from .graph import GeneralGraph

TWO_PI = 2.0 * math.pi


class JumpError(ValueError):
    """Raised when a jump map is applied outside its jump set."""


class InvariantError(RuntimeError):
    """Raised when a guaranteed model invariant is violated (internal error)."""


@dataclass
class HybridState:
    """Phases, logic variables, and optional auxiliary states."""

    theta: np.ndarray
    q: np.ndarray
    aux: np.ndarray | None = None

    def copy(self) -> "HybridState":
        return HybridState(
            self.theta.copy(),
            self.q.copy(),
            None if self.aux is None else self.aux.copy(),
        )


def make_state(theta, q, aux=None) -> HybridState:
    theta = np.asarray(theta, dtype=float).copy()
    q = np.asarray(q, dtype=float).copy()
    if not np.all(np.isin(q, (-1.0, 0.0, 1.0))):
        raise ValueError("q entries must lie in {-1, 0, 1}")
    return HybridState(theta, q, None if aux is None else np.asarray(aux, dtype=float).copy())


@dataclass
class JumpEvent:
    """One executed jump, with the pre state and every admissible post state."""

    kind: str               # "edge" or "wrap"
    label: str              # "edge:i-j" or "wrap:i", 1-based labels
    t: float
    j_pre: int
    pre: HybridState
    posts: list[HybridState]
    chosen: int = 0

    @property
    def post(self) -> HybridState:
        return self.posts[self.chosen]


def mismatch_vector(x: HybridState, graph: GeneralGraph) -> np.ndarray:
    """Per-edge mismatch B^T theta + 2*pi*q, ordered like graph.edges."""
    return graph.incidence.T @ x.theta + TWO_PI * x.q


def in_state_space(x: HybridState, delta: float, tol: float = 0.0) -> bool:
    limit = math.pi + delta + tol
    return bool(np.all(np.abs(x.theta) <= limit) and np.all(np.isin(x.q, (-1.0, 0.0, 1.0))))


def flow_map(
    x: HybridState,
    omega: np.ndarray,
    kappa: float,
    graph: GeneralGraph,
    spec: CouplingSpec,
) -> tuple[np.ndarray, np.ndarray]:
    """Continuous dynamics (d theta, d q); q is constant along flows.

    theta_dot = omega - kappa * B * sigma(mismatch).  The mismatch is clipped
    to dom sigma before evaluation so intermediate integrator stages that
    poke past the boundary stay well-defined; accepted states never exceed it.
    """
    mis = mismatch_vector(x, graph)
    L = spec.domain_limit
    sig = eval_sigma(spec, np.clip(mis, -L, L))
    dtheta = omega - kappa * (graph.incidence @ sig)
    return dtheta, np.zeros_like(x.q)


def in_D_edge(x: HybridState, ell: int, delta: float, graph: GeneralGraph) -> bool:
    """Edge-unwind jump set: |mismatch_ell| >= pi + delta."""
    mis = mismatch_vector(x, graph)
    return bool(abs(mis[ell]) >= math.pi + delta - 1e-12)


def unwind_targets(x: HybridState, ell: int, graph: GeneralGraph) -> list[int]:
    """Admissible q values after an unwind of edge ell, ascending.

    argmin over h in {-1, 0, 1} of |theta_j - theta_i + 2*h*pi|; two values
    tie exactly when theta_j - theta_i is an odd multiple of pi.
    """
    i, j = graph.edges[ell]
    d = x.theta[j - 1] - x.theta[i - 1]
    cand = np.array([-1.0, 0.0, 1.0])
    vals = np.abs(d + TWO_PI * cand)
    best = vals.min()
    return [int(h) for h, v in zip((-1, 0, 1), vals) if v <= best + 1e-12]


def jump_edge(x: HybridState, ell: int, delta: float, graph: GeneralGraph) -> list[HybridState]:
    """Edge-unwind jump map; returns one post state per admissible q value.

    Guaranteed to land the edge's mismatch at or below max(2*delta, pi),
    strictly inside the flow set.
    """
    if not in_D_edge(x, ell, delta, graph):
        i, j = graph.edges[ell]
        raise JumpError(f"edge ({i},{j}) mismatch is below pi + delta; unwind not enabled")
    posts = []
    bound = max(2.0 * delta, math.pi) + 1e-9
    for h in unwind_targets(x, ell, graph):
        post = x.copy()
        post.q[ell] = float(h)
        new_mis = mismatch_vector(post, graph)[ell]
        if abs(new_mis) > bound:
            raise InvariantError(
                f"post-unwind mismatch {new_mis} exceeds max(2*delta, pi) on edge {graph.edges[ell]}"
            )
        posts.append(post)
    return posts


def in_D_wrap(x: HybridState, node: int, delta: float, graph: GeneralGraph) -> bool:
    """Phase-wrap jump set for node (1-based): |theta_node| = pi + delta and
    no edge strictly beyond its own jump threshold (edge jumps have priority)."""
    L = math.pi + delta
    if abs(abs(x.theta[node - 1]) - L) > 1e-12:
        return False
    mis = mismatch_vector(x, graph)
    return not bool(np.any(np.abs(mis) > L + 1e-12))


def jump_wrap(x: HybridState, node: int, delta: float, graph: GeneralGraph) -> HybridState:
    """Phase-wrap jump map for node (1-based).

    theta_node moves by -sign(theta_node)*2*pi, landing at |theta| = pi - delta;
    incident q values absorb the shift so every edge mismatch is preserved
    exactly.  Raises InvariantError if a q would leave {-1, 0, 1}, which the
    model rules out for states reached by flows and jumps.
    """
    if not in_D_wrap(x, node, delta, graph):
        raise JumpError(f"node {node} is not on the wrap boundary (or an edge jump has priority)")
    s = math.copysign(1.0, x.theta[node - 1])
    post = x.copy()
    post.theta[node - 1] = x.theta[node - 1] - s * TWO_PI
    for ell, (u, v) in enumerate(graph.edges):
        if v == node:
            post.q[ell] = x.q[ell] + s
        elif u == node:
            post.q[ell] = x.q[ell] - s
    if not np.all(np.isin(post.q, (-1.0, 0.0, 1.0))):
        raise InvariantError(
            f"phase wrap at node {node} pushed a logic variable outside {{-1,0,1}}: q = {post.q}"
        )
    return post


def in_A(x: HybridState, graph: GeneralGraph, tol: float = 0.0) -> bool:
    """Synchronization set membership: every mismatch within tol of zero."""
    return bool(np.max(np.abs(mismatch_vector(x, graph)), initial=0.0) <= tol)
