"""Delimited trace output.

Header: t,j,theta_1..theta_n,q_1..q_m,V,mismatch_inf,event.  One row per
accepted integration step and one pre/post row pair per jump (same t,
jump counter differs by one; the post row carries the event label "edge:i-j"
or "wrap:i").  Floats are written with 17 significant digits so a written
trace reads back bit-identically and re-audits to the same numbers.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .coupling import CouplingSpec
from .dynamics import HybridState, JumpEvent
from .graph import GeneralGraph
from .integrator import Sample, SolutionTrace


class TraceFormatError(ValueError):
    """Raised for malformed trace files."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trace_header(n: int, m: int) -> list[str]:
    return (
        ["t", "j"]
        + [f"theta_{i}" for i in range(1, n + 1)]
        + [f"q_{ell}" for ell in range(1, m + 1)]
        + ["V", "mismatch_inf", "event"]
    )


def write_trace_csv(trace: SolutionTrace, path) -> None:
    n = trace.graph.n_nodes
    m = trace.graph.n_edges
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trace_header(n, m))
        for s in trace.samples:
            writer.writerow(
                [_fmt(s.t), str(s.j)]
                + [_fmt(v) for v in s.theta]
                + [str(int(v)) for v in s.q]
                + [_fmt(s.V), _fmt(s.mismatch_inf), s.event]
            )


def read_trace_csv(
    path,
    graph: GeneralGraph,
    coupling: CouplingSpec,
    kappa: float,
    step_h: float = 1e-3,
    sliding_mode: str = "chatter",
) -> SolutionTrace:
    """Read a trace written by write_trace_csv, rebuilding its jump events.

    The graph/coupling context is supplied by the caller (it is not stored in
    the CSV); dimensions are validated against the header.
    """
    n = graph.n_nodes
    m = graph.n_edges
    expected = trace_header(n, m)
    trace = SolutionTrace(graph, coupling, kappa, step_h, sliding_mode)
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            raise TraceFormatError(
                f"{path}: header does not match a {n}-node / {m}-edge trace"
            )
        prev: Sample | None = None
        for row in reader:
            if len(row) != len(expected):
                raise TraceFormatError(f"{path}: row has {len(row)} fields, expected {len(expected)}")
            t = float(row[0])
            j = int(row[1])
            theta = np.array([float(v) for v in row[2 : 2 + n]])
            q = np.array([float(v) for v in row[2 + n : 2 + n + m]])
            V = float(row[2 + n + m])
            mis = float(row[3 + n + m])
            event = row[4 + n + m]
            sample = Sample(t, j, theta, q, None, V, mis, event)
            trace.samples.append(sample)
            if event:
                if prev is None or prev.j != j - 1 or prev.t != t:
                    raise TraceFormatError(
                        f"{path}: jump row at t={t} lacks a matching pre row"
                    )
                kind = "edge" if event.startswith("edge:") else "wrap"
                pre = HybridState(prev.theta.copy(), prev.q.copy())
                post = HybridState(theta.copy(), q.copy())
                trace.jump_events.append(
                    JumpEvent(kind, event, t, prev.j, pre, [post], 0)
                )
            prev = sample
    if not trace.samples:
        raise TraceFormatError(f"{path}: empty trace")
    return trace
