import math

import numpy as np
import pytest

from hybridsync.graph import (
    GraphError,
    build_oriented_tree,
    cyclic_triangle,
    incidence_matrix,
    make_general_graph,
    path_tree,
    smallest_btb_eigenvalue,
    spanning_tree,
    star_tree,
)


def test_incidence_orientation_and_ordering():
    tree = build_oriented_tree(3, [(3, 2), (2, 1)])
    # edges normalized small-to-large and sorted lexicographically
    assert tree.edges == ((1, 2), (2, 3))
    expected = np.array([[-1.0, 0.0], [1.0, -1.0], [0.0, 1.0]])
    np.testing.assert_array_equal(tree.incidence, expected)


def test_single_edge_lambda_min_is_two():
    tree = build_oriented_tree(2, [(1, 2)])
    assert tree.lambda_min == pytest.approx(2.0, abs=1e-12)


def test_path_tree_lambda_min_closed_form():
    # smallest Laplacian eigenvalue of the path graph P_n is 2(1 - cos(pi/n))
    for n in (3, 5, 10):
        tree = path_tree(n)
        assert tree.lambda_min == pytest.approx(2.0 * (1.0 - math.cos(math.pi / n)), rel=1e-10)


def test_star_lambda_min_closed_form():
    # the 4-node star has Laplacian spectrum {0, 1, 1, 4}, so the edge
    # Gramian B^T B has smallest eigenvalue 1
    tree = build_oriented_tree(4, [(1, 2), (2, 3), (2, 4)])
    assert tree.lambda_min == pytest.approx(1.0, rel=1e-12)


def test_cycle_has_zero_eigenvalue():
    g = cyclic_triangle()
    assert smallest_btb_eigenvalue(g.incidence) == 0.0
    expected = np.array([[-1.0, 0.0, 1.0], [1.0, -1.0, 0.0], [0.0, 1.0, -1.0]])
    np.testing.assert_array_equal(g.incidence, expected)


def test_random_trees_positive_gap():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(2, 30))
        parents = [int(rng.integers(0, i)) for i in range(1, n)]
        edges = [(p + 1, i + 2) for i, p in enumerate(parents)]
        tree = build_oriented_tree(n, edges)
        assert tree.lambda_min > 0.0


def test_tree_constructor_rejections():
    with pytest.raises(GraphError, match="edges"):
        build_oriented_tree(3, [(1, 2)])
    with pytest.raises(GraphError, match="disconnected"):
        build_oriented_tree(4, [(1, 2), (2, 3), (1, 3)])
    with pytest.raises(GraphError, match="duplicate"):
        build_oriented_tree(3, [(1, 2), (2, 1)])
    with pytest.raises(GraphError, match="labels"):
        build_oriented_tree(3, [(1, 2), (2, 5)])
    with pytest.raises(GraphError, match="self-loop"):
        make_general_graph(3, [(1, 1)])


def test_bfs_spanning_tree_is_deterministic():
    complete = make_general_graph(4, [(i, j) for i in range(1, 5) for j in range(i + 1, 5)])
    tree = spanning_tree(complete)
    assert tree.edges == ((1, 2), (1, 3), (1, 4))

    ring = make_general_graph(4, [(1, 2), (2, 3), (3, 4), (1, 4)])
    tree = spanning_tree(ring)
    # BFS from node 1, ascending neighbors: 2 then 4, then 3 found via 2
    assert tree.edges == ((1, 2), (1, 4), (2, 3))

    disconnected = make_general_graph(4, [(1, 2), (3, 4)])
    with pytest.raises(GraphError, match="unreachable"):
        spanning_tree(disconnected)


def test_star_tree_shape():
    tree = star_tree(5)
    assert tree.edges == ((1, 2), (1, 3), (1, 4), (1, 5))
    assert tree.incidence.shape == (5, 4)


def test_incidence_columns_sum_to_zero():
    B = incidence_matrix(6, [(1, 4), (2, 3), (5, 6)])
    np.testing.assert_array_equal(B.sum(axis=0), np.zeros(3))
