"""Hybrid coupling rules for leaderless heterogeneous oscillator networks.

Library layout:

- graph:      oriented trees, incidence matrices, spectral gap
- coupling:   odd sector-bounded coupling rules and their regularization
- dynamics:   hybrid flow/jump model on phases plus logic variables
- integrator: RK4 flows with event-located jumps and sliding modes
- lyapunov:   certificate V, gain/time bounds, trace audits
- scenarios:  grid campaigns, counterexample, TOML persistence
- traceio:    delimited trace output
- report:     summary rows, radial data, rendered figures
- cli:        run / validate / sweep commands
"""

from .coupling import (
    CouplingError,
    CouplingSpec,
    antiderivative,
    eval_krasovskii,
    eval_sigma,
    make_coupling,
    sector_mu,
    sigma_sup_c,
    validate_property1,
)
from .dynamics import (
    HybridState,
    InvariantError,
    JumpError,
    JumpEvent,
    flow_map,
    in_A,
    in_D_edge,
    in_D_wrap,
    jump_edge,
    jump_wrap,
    make_state,
    mismatch_vector,
)
from .graph import (
    GeneralGraph,
    GraphError,
    OrientedTree,
    build_oriented_tree,
    cyclic_triangle,
    incidence_matrix,
    make_general_graph,
    path_tree,
    smallest_btb_eigenvalue,
    spanning_tree,
    star_tree,
)
from .integrator import (
    DwellStats,
    IntegratorConfig,
    IntegratorError,
    SolutionTrace,
    detect_boundary,
    dwell_stats,
    reach_time,
    simulate,
)
from .lyapunov import (
    LyapunovReport,
    V,
    audit_trace,
    certificate_constants,
    finite_time_bound,
    kappa_star,
    omega_bar,
    v_bar,
)
from .scenarios import (
    ScenarioConfig,
    ScenarioError,
    constant_scenario,
    counterexample_scenario,
    first_order_grid,
    load_scenario,
    save_scenario,
    second_order_grid,
)

__version__ = "0.1.0"
