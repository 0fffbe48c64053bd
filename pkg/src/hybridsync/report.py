"""Run reports: delimited outputs, summary rows, and rendered figures.

The report path of a run writes the trace CSV, an audit text file, radial
plot data (phases on a shrinking radius so later times spiral inward), a
summary CSV row, and matplotlib renderings of the phases, the mismatch/V
history, and the radial view.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .integrator import SolutionTrace
from .lyapunov import LyapunovReport

SUMMARY_FIELDS = [
    "scenario",
    "kappa",
    "sigma_family",
    "lambda_min",
    "omega_bar",
    "kappa_star",
    "bound_T",
    "reach_time",
    "max_jump_defect",
    "flow_violations",
]


def radial_shrink(t):
    """Radius 1/(1.55*sqrt(t) + 0.66) used to spread trajectories over time."""
    return 1.0 / (1.55 * np.sqrt(np.asarray(t, dtype=float)) + 0.66)


def radial_data(trace: SolutionTrace) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, x, y) arrays with x_i = r(t)cos(theta_i), y_i = r(t)sin(theta_i)."""
    t = trace.times
    theta = np.array([s.theta for s in trace.samples])
    r = radial_shrink(t)[:, None]
    return t, r * np.cos(theta), r * np.sin(theta)


def write_radial_csv(trace: SolutionTrace, path) -> None:
    t, x, y = radial_data(trace)
    n = x.shape[1]
    header = ["t"] + [f"x_{i}" for i in range(1, n + 1)] + [f"y_{i}" for i in range(1, n + 1)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(len(t)):
            writer.writerow(
                [format(t[k], ".17g")]
                + [format(v, ".17g") for v in x[k]]
                + [format(v, ".17g") for v in y[k]]
            )


def append_summary_row(report: LyapunovReport, path) -> None:
    path = Path(path)
    new = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS)
        if new:
            writer.writeheader()
        writer.writerow(report.summary_row())


def steady_state_mismatch(trace: SolutionTrace, t0: float, t1: float) -> float:
    """Mean of the mismatch norm over samples with t in [t0, t1]."""
    t = trace.times
    mask = (t >= t0) & (t <= t1)
    if not np.any(mask):
        raise ValueError(f"trace has no samples in [{t0}, {t1}]")
    return float(np.mean(trace.mismatch_inf[mask]))


def render_phases(trace: SolutionTrace, path) -> None:
    t = trace.times
    theta = np.array([s.theta for s in trace.samples])
    fig, ax = plt.subplots(figsize=(8, 4))
    for i in range(theta.shape[1]):
        ax.plot(t, theta[:, i], lw=0.7)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("theta_i [rad]")
    ax.set_title("phases")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_mismatch(trace: SolutionTrace, path) -> None:
    t = trace.times
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
    ax1.plot(t, trace.mismatch_inf, lw=0.8, color="tab:blue")
    ax1.set_ylabel("max |mismatch| [rad]")
    ax1.set_yscale("symlog", linthresh=1e-9)
    ax2.plot(t, trace.V_values, lw=0.8, color="tab:red")
    ax2.set_ylabel("V")
    ax2.set_xlabel("t [s]")
    ax2.set_yscale("symlog", linthresh=1e-12)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_radial(trace: SolutionTrace, path) -> None:
    t, x, y = radial_data(trace)
    fig, ax = plt.subplots(figsize=(5, 5))
    for i in range(x.shape[1]):
        ax.plot(x[:, i], y[:, i], lw=0.6)
    # radius rings at a few times for orientation
    for tk in np.linspace(0.0, t[-1], 4):
        r = float(radial_shrink(tk))
        ring = np.linspace(0, 2 * math.pi, 200)
        ax.plot(r * np.cos(ring), r * np.sin(ring), color="0.8", lw=0.5, zorder=0)
    ax.set_aspect("equal")
    ax.set_title("phases on shrinking radius")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_sweep(kappas, values, path, ylabel="steady-state mean max |mismatch| [rad]") -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(kappas, values, "o-")
    ax.set_xlabel("kappa")
    ax.set_ylabel(ylabel)
    ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_run_report(trace: SolutionTrace, report: LyapunovReport, out_dir, stem: str) -> dict:
    """Emit every artifact for one run; returns {name: path}."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "trace": out_dir / f"{stem}_trace.csv",
        "audit": out_dir / f"{stem}_audit.txt",
        "radial": out_dir / f"{stem}_radial.csv",
        "phases_png": out_dir / f"{stem}_phases.png",
        "mismatch_png": out_dir / f"{stem}_mismatch.png",
        "radial_png": out_dir / f"{stem}_radial.png",
        "summary": out_dir / "summary.csv",
    }
    from .traceio import write_trace_csv

    write_trace_csv(trace, paths["trace"])
    paths["audit"].write_text(report.to_text() + "\n")
    write_radial_csv(trace, paths["radial"])
    render_phases(trace, paths["phases_png"])
    render_mismatch(trace, paths["mismatch_png"])
    render_radial(trace, paths["radial_png"])
    append_summary_row(report, paths["summary"])
    return paths
