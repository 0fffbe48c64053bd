"""Command-line interface.

Subcommands:

- run:      simulate a scenario file, audit the trace, and write the full
            report (trace CSV, audit text, radial data, figures, summary row).
- validate: check a scenario / coupling / graph definition and print the
            validation outcome and derived constants.
- sweep:    run a scenario across gain and/or coupling-family variants
            concurrently and report the steady-state mismatch trend.

Exit codes: 0 success, 2 validation failure, 3 integrator diagnostic,
4 audit failure.  The default output directory is $HYBRIDSYNC_OUT or ./out.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .coupling import CouplingError, make_coupling, sector_mu, sigma_sup_c, validate_property1
from .graph import GraphError, build_oriented_tree, make_general_graph, smallest_btb_eigenvalue
from .integrator import IntegratorConfig, IntegratorError, simulate
from .lyapunov import audit_trace
from .report import render_sweep, steady_state_mismatch, write_run_report
from .scenarios import (
    GRID_KINDS,
    ScenarioError,
    constant_scenario,
    first_order_grid,
    load_scenario,
    second_order_grid,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INTEGRATOR = 3
EXIT_AUDIT = 4


def _out_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get("HYBRIDSYNC_OUT", "out"))


def _apply_overrides(cfg, args):
    """Rebuild a scenario with the CLI's override flags applied."""
    kappa = cfg.kappa
    if getattr(args, "no_coupling", False):
        kappa = 0.0
    if args.kappa is not None:
        kappa = args.kappa
    t_end = args.t_end if args.t_end is not None else cfg.t_end
    family = args.sigma or cfg.coupling.family
    delta = args.delta if args.delta is not None else cfg.coupling.delta
    params = dict(cfg.coupling.params) or None
    if cfg.kind in GRID_KINDS:
        seed = args.seed if args.seed is not None else cfg.seed
        maker = first_order_grid if cfg.kind == "first_order_grid" else second_order_grid
        return maker(
            seed,
            n=cfg.graph.n_nodes,
            kappa=kappa,
            delta=delta,
            family=family,
            coupling_params=params,
            tree=cfg.graph,
            t_end=t_end,
            scenario_id=cfg.scenario_id,
        )
    coupling = cfg.coupling
    if family != coupling.family or delta != coupling.delta:
        table = coupling.table or None
        if family != "table":
            table = None
        coupling = make_coupling(family, delta, params if family == coupling.family else None, table=table)
    return constant_scenario(
        cfg.graph,
        coupling,
        kappa,
        cfg.omega_const,
        cfg.theta0,
        cfg.q0,
        t_end,
        scenario_id=cfg.scenario_id,
        aux0=cfg.aux0,
    )


def _integrator_config(args) -> IntegratorConfig:
    kwargs = {}
    if args.step is not None:
        kwargs["step_h"] = args.step
        kwargs["event_tol"] = min(1e-9, args.step / 100.0)
    if args.sliding is not None:
        kwargs["sliding_mode"] = {"chatter": "chatter", "eqctl": "equivalent_control"}[args.sliding]
    if getattr(args, "max_jumps", None) is not None:
        kwargs["max_jumps"] = args.max_jumps
    return IntegratorConfig(**kwargs)


def cmd_run(args) -> int:
    try:
        cfg = _apply_overrides(load_scenario(args.scenario), args)
        icfg = _integrator_config(args)
    except (ScenarioError, CouplingError, GraphError, FileNotFoundError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        trace = simulate(cfg, icfg)
    except IntegratorError as exc:
        print(f"integrator diagnostic: {exc}", file=sys.stderr)
        return EXIT_INTEGRATOR
    report = audit_trace(trace, cfg)
    out = _out_dir(args.out)
    stem = cfg.scenario_id.replace("/", "_")
    paths = write_run_report(trace, report, out, stem)
    print(report.to_text())
    print(f"artifacts written under {out}/ ({', '.join(p.name for p in paths.values())})")
    if not report.passed:
        print("audit failed: Lyapunov guarantees violated on this trace", file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


def cmd_validate(args) -> int:
    """Validate a scenario file, or a bare [coupling] / [graph] definition."""
    try:
        import tomllib
    except ModuleNotFoundError:  # pragma: no cover
        import tomli as tomllib
    path = Path(args.path)
    try:
        doc = tomllib.loads(path.read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    ok = True
    if "scenario" in doc:
        try:
            cfg = load_scenario(path)
        except (ScenarioError, CouplingError, GraphError) as exc:
            print(f"validation error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        from .lyapunov import certificate_constants

        consts = certificate_constants(cfg.graph, cfg.coupling, cfg.omega_bounds)
        print(f"scenario: {cfg.scenario_id} ({cfg.kind})")
        print(f"lambda_min: {consts.lambda_min:.12g}")
        print(f"omega_bounds: [{cfg.omega_bounds[0]:.6g}, {cfg.omega_bounds[1]:.6g}]")
        print(f"omega_bar: {consts.omega_bar:.12g}")
        print(f"c: {consts.c:.12g}  mu: {consts.mu}")
        print(f"kappa_star: {consts.kappa_star}")
        if consts.lambda_min <= 0.0:
            print("diagnostic: communication graph is not a tree (lambda_min = 0); no guarantee")
    elif "coupling" in doc:
        cdoc = doc["coupling"]
        try:
            spec = make_coupling(
                cdoc["family"], cdoc["delta"], cdoc.get("params"), table=cdoc.get("table")
            )
        except (CouplingError, KeyError) as exc:
            print(f"validation error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        rep = validate_property1(spec)
        print(rep)
        print(f"c: {sigma_sup_c(spec):.12g}  mu: {sector_mu(spec)}")
        ok = rep.passed
    elif "graph" in doc:
        gdoc = doc["graph"]
        try:
            if gdoc.get("tree", True):
                g = build_oriented_tree(gdoc["nodes"], [tuple(e) for e in gdoc["edges"]])
                print(f"tree on {g.n_nodes} nodes, lambda_min: {g.lambda_min:.12g}")
            else:
                g = make_general_graph(gdoc["nodes"], [tuple(e) for e in gdoc["edges"]])
                lam = smallest_btb_eigenvalue(g.incidence)
                print(f"graph on {g.n_nodes} nodes, lambda_min: {lam:.12g}")
                if lam <= 0.0:
                    print("diagnostic: zero eigenvalue, graph is not a tree")
        except (GraphError, KeyError) as exc:
            print(f"validation error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
    else:
        print("validation error: file defines none of [scenario], [coupling], [graph]", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_sweep(args) -> int:
    try:
        base = load_scenario(args.scenario)
        kappas = [float(v) for v in args.kappa_list.split(",")] if args.kappa_list else [base.kappa]
        families = args.sigma_list.split(",") if args.sigma_list else [base.coupling.family]
        icfg = _integrator_config(args)
    except (ScenarioError, CouplingError, GraphError, ValueError, FileNotFoundError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    variants = []
    try:
        for fam in families:
            for kap in kappas:
                ns = argparse.Namespace(
                    kappa=kap, sigma=fam, delta=None, t_end=args.t_end, seed=args.seed,
                    no_coupling=False,
                )
                cfg = _apply_overrides(base, ns)
                cfg.scenario_id = f"{base.scenario_id}-{fam}-k{kap:g}"
                variants.append(cfg)
    except (ScenarioError, CouplingError, GraphError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        with ThreadPoolExecutor(max_workers=min(len(variants), os.cpu_count() or 1)) as pool:
            traces = list(pool.map(lambda c: simulate(c, icfg), variants))
    except IntegratorError as exc:
        print(f"integrator diagnostic: {exc}", file=sys.stderr)
        return EXIT_INTEGRATOR

    out = _out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    window = args.window
    rows = []
    failed = False
    for cfg, trace in zip(variants, traces):
        report = audit_trace(trace, cfg)
        t1 = trace.samples[-1].t
        ss = steady_state_mismatch(trace, max(0.0, t1 - window), t1)
        rows.append((cfg.scenario_id, cfg.coupling.family, cfg.kappa, ss))
        write_run_report(trace, report, out, cfg.scenario_id.replace("/", "_"))
        failed = failed or not report.passed
        print(f"{cfg.scenario_id}: steady-state mean max |mismatch| = {ss:.6g} rad")

    import csv as _csv

    with open(out / "sweep.csv", "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["scenario", "sigma_family", "kappa", "steady_state_mismatch"])
        w.writerows(rows)
    for fam in families:
        pts = sorted((r[2], r[3]) for r in rows if r[1] == fam)
        if len(pts) > 1:
            render_sweep([p[0] for p in pts], [p[1] for p in pts], out / f"sweep_{fam}.png")
    return EXIT_AUDIT if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridsync",
        description="Hybrid coupling rules for leaderless oscillator networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--step", type=float, default=None, help="integration step (default 1e-3)")
        p.add_argument("--t-end", type=float, default=None, help="override the scenario horizon")
        p.add_argument(
            "--sliding", choices=["chatter", "eqctl"], default=None,
            help="treatment of a discontinuous rule near synchronization",
        )
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--max-jumps", type=int, default=None, help="jump budget before a Zeno diagnostic")
        p.add_argument("--out", default=None, help="output directory (default $HYBRIDSYNC_OUT or ./out)")

    p_run = sub.add_parser("run", help="simulate a scenario and write the full report")
    p_run.add_argument("--scenario", required=True, help="scenario TOML file")
    p_run.add_argument("--sigma", default=None, help="override the coupling family")
    p_run.add_argument("--kappa", type=float, default=None, help="override the gain")
    p_run.add_argument("--delta", type=float, default=None, help="override the domain half-width offset")
    p_run.add_argument("--no-coupling", action="store_true", help="disable the cyber layer (kappa = 0)")
    add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="validate a scenario, coupling, or graph file")
    p_val.add_argument("path", help="TOML file with [scenario], [coupling], or [graph]")
    p_val.set_defaults(func=cmd_validate)

    p_sweep = sub.add_parser("sweep", help="run gain / coupling-family variants concurrently")
    p_sweep.add_argument("--scenario", required=True, help="base scenario TOML file")
    p_sweep.add_argument("--kappa-list", default=None, help="comma-separated gains")
    p_sweep.add_argument("--sigma-list", default=None, help="comma-separated coupling families")
    p_sweep.add_argument("--window", type=float, default=2.0, help="steady-state window length [s]")
    add_common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
