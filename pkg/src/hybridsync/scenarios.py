"""Scenario definitions: power-grid campaigns, the cyclic counterexample, file IO.

A scenario bundles the communication graph, coupling rule, gain, horizon,
initial state, and the node frequency model omega(theta, aux, t).  Grid
scenarios sample their physical parameters from a mandatory integer seed
through named, order-independent substreams, so the same seed always yields
bit-identical parameters.

Frequency models:

- "constant":          omega is a fixed vector (zero for the counterexample).
- "first_order_grid":  droop-controlled generators
      omega_i = (1/zeta_i) * ( wt_i*(1 + 0.3*sin(chi_i*t + phi_i)) + d_i(t)
                               - sum_j K_ij * sin(theta_i - theta_j + Phi_ij) )
  over an all-to-all physical layer (the standard lossy-line swing coupling,
  attractive for small angle differences), with a disturbance burst
  d_i(t) = 5*sin(50*chi_i*t + phi_i) on the window (5.2, 6.0) and 0 elsewhere.
- "second_order_grid": swing dynamics; omega_i is an auxiliary state with
      m_i * omega_dot_i = -zeta_i*omega_i + (same bracket as above)
  and theta_dot picks up omega_i.  Auxiliary states pass through jumps.

Scenario files are TOML; loading a saved scenario reproduces it exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - python 3.10
    import tomli as tomllib

from .coupling import CouplingSpec, make_coupling
from .dynamics import HybridState, make_state
from .graph import (
    GeneralGraph,
    OrientedTree,
    build_oriented_tree,
    cyclic_triangle,
    make_general_graph,
    path_tree,
)

DEFAULT_N = 10
DEFAULT_KAPPA = 576.0 * math.pi / 10.0
DEFAULT_DELTA = math.pi / 4.0
DEFAULT_T_END = 11.0
BURST_WINDOW = (5.2, 6.0)

_STREAMS = {
    "chi": 0,
    "omega_tilde": 1,
    "phi": 2,
    "zeta": 3,
    "kappa_phys": 4,
    "phi_pair": 5,
    "mass": 6,
    "aux0": 7,
}

GRID_KINDS = ("first_order_grid", "second_order_grid")
KINDS = GRID_KINDS + ("constant",)


class ScenarioError(ValueError):
    """Raised for invalid scenario definitions or files."""


def _stream(seed: int, name: str) -> np.random.Generator:
    """Named substream of the scenario seed; independent of draw order elsewhere."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_STREAMS[name],)))


def equally_spaced_phases(n: int) -> tuple[float, ...]:
    """theta_i = -pi + 2*pi*(i-1)/n, the grid campaigns' initial condition."""
    return tuple(-math.pi + 2.0 * math.pi * i / n for i in range(n))


@dataclass
class GridParams:
    """Physical parameters sampled for one grid scenario."""

    chi: np.ndarray          # modulation/disturbance frequencies, uni[-1, 1]
    omega_tilde: np.ndarray  # nominal drive, uni[-5, 5]
    phi: np.ndarray          # drive phases, uni[0, atan(1/4)]
    zeta: np.ndarray         # damping, uni([20, 30]/(120*pi))
    K: np.ndarray            # symmetric physical gains, uni[0.7, 1.2], zero diagonal
    Phi: np.ndarray          # physical phase shifts, uni[0, atan(1/4)], zero diagonal
    mass: np.ndarray | None = None      # inertia, uni([2, 12]/(120*pi)); second order
    aux0: np.ndarray | None = None      # initial frequencies, uni[-0.1, 0.1]; second order


def sample_grid_params(seed: int, n: int, second_order: bool) -> GridParams:
    phase_hi = math.atan(0.25)
    chi = _stream(seed, "chi").uniform(-1.0, 1.0, n)
    omega_tilde = _stream(seed, "omega_tilde").uniform(-5.0, 5.0, n)
    phi = _stream(seed, "phi").uniform(0.0, phase_hi, n)
    zeta = _stream(seed, "zeta").uniform(20.0 / (120.0 * math.pi), 30.0 / (120.0 * math.pi), n)
    K = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    K[iu] = _stream(seed, "kappa_phys").uniform(0.7, 1.2, len(iu[0]))
    K = K + K.T
    Phi = _stream(seed, "phi_pair").uniform(0.0, phase_hi, (n, n))
    np.fill_diagonal(Phi, 0.0)
    mass = aux0 = None
    if second_order:
        mass = _stream(seed, "mass").uniform(2.0 / (120.0 * math.pi), 12.0 / (120.0 * math.pi), n)
        aux0 = _stream(seed, "aux0").uniform(-0.1, 0.1, n)
    return GridParams(chi, omega_tilde, phi, zeta, K, Phi, mass, aux0)


@dataclass
class ScenarioConfig:
    """A fully specified simulation scenario.

    Equality compares the persisted definition (id, kind, seed, gain,
    horizon, graph, coupling, initial data), which is what scenario files
    round-trip; derived arrays are rebuilt from the seed.
    """

    scenario_id: str
    kind: str
    seed: int | None
    kappa: float
    t_end: float
    graph: GeneralGraph
    coupling: CouplingSpec
    theta0: tuple[float, ...]
    q0: tuple[float, ...]
    aux0: tuple[float, ...] | None = None
    omega_const: tuple[float, ...] | None = None
    params: GridParams | None = field(default=None, compare=False, repr=False)
    omega_bounds: tuple[float, float] = field(default=(0.0, 0.0), compare=False)
    time_breakpoints: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ScenarioError(f"unknown scenario kind {self.kind!r}")
        n = self.graph.n_nodes
        if len(self.theta0) != n or len(self.q0) != self.graph.n_edges:
            raise ScenarioError("initial state dimensions do not match the graph")
        if self.kind in GRID_KINDS:
            if self.seed is None:
                raise ScenarioError(f"scenario kind {self.kind!r} requires a seed")
            if self.params is None:
                self.params = sample_grid_params(
                    self.seed, n, self.kind == "second_order_grid"
                )
            self.time_breakpoints = BURST_WINDOW
            self.omega_bounds = self._grid_omega_bounds()
        else:
            if self.omega_const is None:
                raise ScenarioError("constant scenarios need an omega vector")
            if len(self.omega_const) != n:
                raise ScenarioError("omega vector length does not match the node count")
            lo = float(min(self.omega_const))
            hi = float(max(self.omega_const))
            self.omega_bounds = (lo, hi)

    # -- frequency models ------------------------------------------------

    def _bracket(self, theta: np.ndarray, t: float) -> np.ndarray:
        """Drive + disturbance - physical coupling, before the 1/zeta scaling."""
        p = self.params
        drive = p.omega_tilde * (1.0 + 0.3 * np.sin(p.chi * t + p.phi))
        if BURST_WINDOW[0] < t < BURST_WINDOW[1]:
            drive = drive + 5.0 * np.sin(50.0 * p.chi * t + p.phi)
        coup = np.sum(p.K * np.sin(theta[:, None] - theta[None, :] + p.Phi), axis=1)
        return drive - coup

    def omega(self, theta: np.ndarray, aux: np.ndarray | None, t: float) -> np.ndarray:
        if self.kind == "constant":
            return np.asarray(self.omega_const, dtype=float)
        if self.kind == "second_order_grid":
            return aux
        return self._bracket(theta, t) / self.params.zeta

    def aux_rhs(self, theta: np.ndarray, aux: np.ndarray, t: float) -> np.ndarray | None:
        if self.kind != "second_order_grid":
            return None
        p = self.params
        return (-p.zeta * aux + self._bracket(theta, t)) / p.mass

    def initial_state(self) -> HybridState:
        return make_state(self.theta0, self.q0, self.aux0)

    # -- worst-case frequency interval ------------------------------------

    def _grid_omega_bounds(self) -> tuple[float, float]:
        p = self.params
        wt = p.omega_tilde
        drive_lo = np.minimum(0.7 * wt, 1.3 * wt) - 5.0 - np.sum(p.K, axis=1)
        drive_hi = np.maximum(0.7 * wt, 1.3 * wt) + 5.0 + np.sum(p.K, axis=1)
        if self.kind == "first_order_grid":
            lo = drive_lo / p.zeta
            hi = drive_hi / p.zeta
            return (float(np.min(lo)), float(np.max(hi)))
        # second order: |omega_i| <= max(|omega_i(0)|, U_i / zeta_i) is invariant
        U = np.maximum(np.abs(drive_lo), np.abs(drive_hi))
        bound = np.maximum(np.abs(np.asarray(self.aux0)), U / p.zeta)
        top = float(np.max(bound))
        return (-top, top)


# -- factories -------------------------------------------------------------


def first_order_grid(
    seed: int,
    *,
    n: int = DEFAULT_N,
    kappa: float = DEFAULT_KAPPA,
    delta: float = DEFAULT_DELTA,
    family: str = "sign",
    coupling_params: dict | None = None,
    tree: OrientedTree | None = None,
    t_end: float = DEFAULT_T_END,
    scenario_id: str | None = None,
) -> ScenarioConfig:
    """Droop-controlled grid over a communication tree (default: the path)."""
    tree = tree if tree is not None else path_tree(n)
    spec = make_coupling(family, delta, coupling_params)
    return ScenarioConfig(
        scenario_id or f"grid1-{family}-seed{seed}",
        "first_order_grid",
        seed,
        float(kappa),
        float(t_end),
        tree,
        spec,
        equally_spaced_phases(n),
        (0.0,) * tree.n_edges,
    )


def second_order_grid(
    seed: int,
    *,
    n: int = DEFAULT_N,
    kappa: float = DEFAULT_KAPPA,
    delta: float = DEFAULT_DELTA,
    family: str = "sign",
    coupling_params: dict | None = None,
    tree: OrientedTree | None = None,
    t_end: float = DEFAULT_T_END,
    scenario_id: str | None = None,
) -> ScenarioConfig:
    """Swing-dynamics grid; node frequencies are auxiliary states."""
    tree = tree if tree is not None else path_tree(n)
    spec = make_coupling(family, delta, coupling_params)
    params = sample_grid_params(seed, n, True)
    return ScenarioConfig(
        scenario_id or f"grid2-{family}-seed{seed}",
        "second_order_grid",
        seed,
        float(kappa),
        float(t_end),
        tree,
        spec,
        equally_spaced_phases(n),
        (0.0,) * tree.n_edges,
        aux0=tuple(float(v) for v in params.aux0),
        params=params,
    )


def constant_scenario(
    graph: GeneralGraph,
    coupling: CouplingSpec,
    kappa: float,
    omega,
    theta0,
    q0,
    t_end: float,
    scenario_id: str = "constant",
    aux0=None,
) -> ScenarioConfig:
    return ScenarioConfig(
        scenario_id,
        "constant",
        None,
        float(kappa),
        float(t_end),
        graph,
        coupling,
        tuple(float(v) for v in theta0),
        tuple(float(v) for v in q0),
        aux0=None if aux0 is None else tuple(float(v) for v in aux0),
        omega_const=tuple(float(v) for v in omega),
    )


def counterexample_scenario(t_end: float = 10.0) -> ScenarioConfig:
    """Stationary non-synchronizing state on the cyclic triangle.

    Zero frequencies, delta = 3*pi/4, phases (-2*pi/3, 0, 2*pi/3) with
    q = (0, 0, 1): every edge mismatch equals 2*pi/3, the coupling vector is
    constant across edges, and the cyclic incidence matrix annihilates it, so
    the state never moves and never jumps.
    """
    graph = cyclic_triangle()
    spec = make_coupling("ramp", 3.0 * math.pi / 4.0)
    return constant_scenario(
        graph,
        spec,
        1.0,
        (0.0, 0.0, 0.0),
        (-2.0 * math.pi / 3.0, 0.0, 2.0 * math.pi / 3.0),
        (0.0, 0.0, 1.0),
        t_end,
        scenario_id="counterexample",
    )


# -- TOML persistence --------------------------------------------------------


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ScenarioError(f"cannot serialize value {v!r}")


def _toml_dump(doc: dict) -> str:
    lines: list[str] = []
    for table, entries in doc.items():
        lines.append(f"[{table}]")
        for key, v in entries.items():
            if isinstance(v, dict):
                continue
            lines.append(f"{key} = {_toml_value(v)}")
        for key, v in entries.items():
            if isinstance(v, dict) and v:
                lines.append("")
                lines.append(f"[{table}.{key}]")
                for k2, v2 in v.items():
                    lines.append(f"{k2} = {_toml_value(v2)}")
        lines.append("")
    return "\n".join(lines)


def save_scenario(cfg: ScenarioConfig, path) -> None:
    doc: dict = {
        "scenario": {
            "id": cfg.scenario_id,
            "kind": cfg.kind,
            "kappa": cfg.kappa,
            "t_end": cfg.t_end,
        },
        "graph": {
            "nodes": cfg.graph.n_nodes,
            "edges": [list(e) for e in cfg.graph.edges],
            "tree": isinstance(cfg.graph, OrientedTree),
        },
        "coupling": {
            "family": cfg.coupling.family,
            "delta": cfg.coupling.delta,
        },
    }
    if cfg.seed is not None:
        doc["scenario"]["seed"] = cfg.seed
    if cfg.coupling.params:
        doc["coupling"]["params"] = dict(cfg.coupling.params)
    if cfg.coupling.table:
        doc["coupling"]["table"] = [list(k) for k in cfg.coupling.table]
    if cfg.kind == "constant":
        doc["initial"] = {"theta": list(cfg.theta0), "q": list(cfg.q0)}
        if cfg.aux0 is not None:
            doc["initial"]["aux"] = list(cfg.aux0)
        doc["omega"] = {"values": list(cfg.omega_const)}
    Path(path).write_text(_toml_dump(doc))


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: not valid TOML: {exc}") from exc
    try:
        meta = doc["scenario"]
        kind = meta["kind"]
        gdoc = doc["graph"]
        cdoc = doc["coupling"]
    except KeyError as exc:
        raise ScenarioError(f"{path}: missing required table/key {exc}") from exc
    if kind not in KINDS:
        raise ScenarioError(f"{path}: unknown scenario kind {kind!r}")
    if kind in GRID_KINDS and "seed" not in meta:
        raise ScenarioError(f"{path}: grid scenarios require an integer seed")

    edges = [tuple(e) for e in gdoc["edges"]]
    if gdoc.get("tree", True):
        graph: GeneralGraph = build_oriented_tree(gdoc["nodes"], edges)
    else:
        graph = make_general_graph(gdoc["nodes"], edges)
    spec = make_coupling(
        cdoc["family"],
        cdoc["delta"],
        cdoc.get("params"),
        table=cdoc.get("table"),
    )
    scenario_id = meta.get("id", path.stem)
    kappa = float(meta["kappa"])
    t_end = float(meta["t_end"])

    if kind == "constant":
        init = doc.get("initial", {})
        theta0 = init.get("theta")
        q0 = init.get("q", [0.0] * graph.n_edges)
        if theta0 is None:
            raise ScenarioError(f"{path}: constant scenarios need [initial] theta")
        omega = doc.get("omega", {}).get("values")
        if omega is None:
            raise ScenarioError(f"{path}: constant scenarios need [omega] values")
        return constant_scenario(
            graph, spec, kappa, omega, theta0, q0, t_end,
            scenario_id=scenario_id, aux0=init.get("aux"),
        )

    seed = int(meta["seed"])
    maker = first_order_grid if kind == "first_order_grid" else second_order_grid
    if not isinstance(graph, OrientedTree):
        raise ScenarioError(f"{path}: grid scenarios need a tree communication graph")
    return maker(
        seed,
        n=graph.n_nodes,
        kappa=kappa,
        delta=spec.delta,
        family=spec.family,
        coupling_params=dict(spec.params) or None,
        tree=graph,
        t_end=t_end,
        scenario_id=scenario_id,
    )
