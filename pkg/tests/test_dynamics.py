import math

import numpy as np
import pytest

from hybridsync.coupling import make_coupling
from hybridsync.dynamics import (
    JumpError,
    in_A,
    in_D_edge,
    in_D_wrap,
    in_state_space,
    jump_edge,
    jump_wrap,
    make_state,
    mismatch_vector,
    unwind_targets,
    flow_map,
)
from hybridsync.graph import build_oriented_tree, path_tree

DELTA = math.pi / 4
L = math.pi + DELTA


def two_node():
    return build_oriented_tree(2, [(1, 2)])


def test_mismatch_vector_includes_logic_offset():
    tree = two_node()
    x = make_state([0.5, -0.25], [1.0])
    assert mismatch_vector(x, tree)[0] == pytest.approx(-0.75 + 2 * math.pi)


def test_make_state_rejects_bad_logic_values():
    with pytest.raises(ValueError, match="q entries"):
        make_state([0.0, 0.0], [0.5])


def test_flow_map_two_nodes_sign():
    tree = two_node()
    spec = make_coupling("sign", DELTA)
    omega = np.array([2.0, -1.0])
    x = make_state([0.3, -0.2], [0.0])
    # mismatch = -0.5, sigma = -1, B = [-1, 1]^T
    dtheta, dq = flow_map(x, omega, kappa=3.0, graph=tree, spec=spec)
    np.testing.assert_allclose(dtheta, [2.0 - 3.0, -1.0 + 3.0])
    np.testing.assert_array_equal(dq, [0.0])


def test_flow_map_clips_stage_overshoot():
    tree = two_node()
    spec = make_coupling("ramp", DELTA)
    x = make_state([L + 0.01, -L], [0.0])  # intermediate stage poking past the domain
    dtheta, _ = flow_map(x, np.zeros(2), kappa=1.0, graph=tree, spec=spec)
    assert np.all(np.isfinite(dtheta))


def test_edge_unwind_basic():
    tree = two_node()
    x = make_state([-L / 2, L / 2], [0.0])  # mismatch exactly pi + delta
    assert in_D_edge(x, 0, DELTA, tree)
    posts = jump_edge(x, 0, DELTA, tree)
    assert len(posts) == 1
    assert posts[0].q[0] == -1.0
    new_mis = mismatch_vector(posts[0], tree)[0]
    assert abs(new_mis) == pytest.approx(2 * math.pi - L, abs=1e-12)
    assert abs(new_mis) <= max(2 * DELTA, math.pi)


def test_edge_unwind_not_enabled_raises():
    tree = two_node()
    x = make_state([0.0, 1.0], [0.0])
    assert not in_D_edge(x, 0, DELTA, tree)
    with pytest.raises(JumpError, match="not enabled"):
        jump_edge(x, 0, DELTA, tree)


def test_unwind_tie_at_odd_pi_gives_two_targets():
    tree = two_node()
    # theta_2 - theta_1 = pi: |pi| ties |pi - 2pi|; candidates ascend
    x = make_state([-math.pi / 2, math.pi / 2], [1.0])
    assert unwind_targets(x, 0, tree) == [-1, 0]
    x2 = make_state([math.pi / 2, -math.pi / 2], [-1.0])
    assert unwind_targets(x2, 0, tree) == [0, 1]
    posts = jump_edge(x2, 0, DELTA, tree)
    assert [p.q[0] for p in posts] == [0.0, 1.0]


def test_unwind_single_target_off_tie():
    tree = two_node()
    x = make_state([-math.pi / 2 - 0.2, math.pi / 2 + 0.2], [1.0])
    assert unwind_targets(x, 0, tree) == [-1]


def test_wrap_preserves_every_mismatch_exactly():
    tree = path_tree(3)
    x = make_state([L, 0.4, -0.8], [0.0, 0.0])
    assert in_D_wrap(x, 1, DELTA, tree)
    pre_mis = mismatch_vector(x, tree)
    post = jump_wrap(x, 1, DELTA, tree)
    np.testing.assert_array_equal(mismatch_vector(post, tree), pre_mis)
    assert post.theta[0] == pytest.approx(L - 2 * math.pi)
    assert abs(post.theta[0]) == pytest.approx(math.pi - DELTA)
    # node 1 is the tail of edge (1,2); theta shrank by 2*pi so q drops by 1
    assert post.q[0] == -1.0
    assert post.q[1] == 0.0


def test_wrap_head_node_adjusts_q_opposite():
    tree = two_node()
    x = make_state([-0.1, -L], [0.0])
    post = jump_wrap(x, 2, DELTA, tree)
    assert post.theta[1] == pytest.approx(2 * math.pi - L)
    assert post.q[0] == -1.0  # head node, sign(theta) = -1


def test_wrap_blocked_by_edge_priority():
    tree = two_node()
    # node 1 sits at the wrap boundary but the edge mismatch is strictly
    # beyond pi + delta, so the edge jump has priority
    x = make_state([-L, math.pi - DELTA + 0.1], [0.0])
    assert abs(mismatch_vector(x, tree)[0]) > L
    assert not in_D_wrap(x, 1, DELTA, tree)
    with pytest.raises(JumpError, match="priority"):
        jump_wrap(x, 1, DELTA, tree)


def test_wrap_requires_boundary():
    tree = two_node()
    x = make_state([0.0, 0.0], [0.0])
    with pytest.raises(JumpError, match="boundary"):
        jump_wrap(x, 1, DELTA, tree)


def test_wrap_passes_aux_through():
    tree = two_node()
    x = make_state([L, 0.0], [0.0], aux=[3.5, -1.0])
    post = jump_wrap(x, 1, DELTA, tree)
    np.testing.assert_array_equal(post.aux, [3.5, -1.0])
    posts = jump_edge(make_state([-L / 2, L / 2], [0.0], aux=[1.0, 2.0]), 0, DELTA, tree)
    np.testing.assert_array_equal(posts[0].aux, [1.0, 2.0])


def test_in_A_and_state_space():
    tree = path_tree(3)
    sync = make_state([0.2, 0.2, 0.2], [0.0, 0.0])
    assert in_A(sync, tree)
    off = make_state([0.2, 0.3, 0.2], [0.0, 0.0])
    assert not in_A(off, tree)
    assert in_A(off, tree, tol=0.2)
    assert in_state_space(sync, DELTA)
    assert not in_state_space(make_state([L + 0.1, 0.0, 0.0], [0.0, 0.0]), DELTA)
