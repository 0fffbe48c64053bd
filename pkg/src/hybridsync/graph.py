"""Communication graphs: oriented incidence matrices, trees and their spectral gap.

Node labels are 1-based throughout the public API (matching scenario files);
row i-1 of an incidence matrix corresponds to node i.  Every undirected edge
is oriented from its smaller label to its larger label, and edges are ordered
lexicographically by (tail, head).  That ordering is shared by the mismatch
vector, the coupling vector and the logic-variable vector q.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_EIG_RTOL = 1e-10


class GraphError(ValueError):
    """Raised when a graph violates a constructor's requirements."""


def _check_edge_labels(n_nodes: int, edges) -> None:
    for i, j in edges:
        if not (1 <= i <= n_nodes and 1 <= j <= n_nodes):
            raise GraphError(f"edge ({i},{j}) uses labels outside 1..{n_nodes}")
        if i == j:
            raise GraphError(f"self-loop ({i},{j}) is not allowed")


def incidence_matrix(n_nodes: int, edges) -> np.ndarray:
    """(n, m) incidence matrix: column ell has -1 at the tail, +1 at the head."""
    B = np.zeros((n_nodes, len(edges)))
    for ell, (i, j) in enumerate(edges):
        B[i - 1, ell] = -1.0
        B[j - 1, ell] = 1.0
    return B


@dataclass(frozen=True)
class GeneralGraph:
    """Directed graph over nodes 1..n_nodes; cycles are permitted."""

    n_nodes: int
    edges: tuple[tuple[int, int], ...]
    incidence: np.ndarray = field(compare=False, repr=False)

    @property
    def n_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class OrientedTree(GeneralGraph):
    """Spanning tree with smaller-to-larger edge orientation and lambda_min(B^T B) > 0."""

    lambda_min: float = 0.0


def make_general_graph(n_nodes: int, edges) -> GeneralGraph:
    edges = tuple((int(i), int(j)) for i, j in edges)
    _check_edge_labels(n_nodes, edges)
    return GeneralGraph(n_nodes, edges, incidence_matrix(n_nodes, edges))


def _components(n_nodes: int, undirected: set[frozenset]) -> list[set[int]]:
    adj: dict[int, set[int]] = {i: set() for i in range(1, n_nodes + 1)}
    for e in undirected:
        i, j = tuple(e)
        adj[i].add(j)
        adj[j].add(i)
    seen: set[int] = set()
    comps = []
    for start in range(1, n_nodes + 1):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in comp:
                    comp.add(v)
                    stack.append(v)
        seen |= comp
        comps.append(comp)
    return comps


def build_oriented_tree(n_nodes: int, edges) -> OrientedTree:
    """Build a spanning tree from undirected node pairs.

    Pairs are normalized to (min, max) orientation and sorted
    lexicographically.  Raises GraphError naming the violation if the edge
    set is not a spanning tree (wrong edge count, disconnected, or cyclic).
    """
    if n_nodes < 1:
        raise GraphError("a tree needs at least one node")
    norm = tuple(sorted((min(int(i), int(j)), max(int(i), int(j))) for i, j in edges))
    _check_edge_labels(n_nodes, norm)
    if len(set(norm)) != len(norm):
        dup = [e for k, e in enumerate(norm) if e in norm[:k]][0]
        raise GraphError(f"duplicate edge {dup}")
    if len(norm) != n_nodes - 1:
        raise GraphError(
            f"a spanning tree on {n_nodes} nodes has {n_nodes - 1} edges, got {len(norm)}"
        )
    comps = _components(n_nodes, {frozenset(e) for e in norm})
    if len(comps) > 1:
        raise GraphError(f"graph is disconnected; one component is {sorted(comps[0])}")
    # connected with n-1 edges implies acyclic
    B = incidence_matrix(n_nodes, norm)
    lam = smallest_btb_eigenvalue(B)
    if n_nodes > 1 and lam <= 0.0:
        raise GraphError("incidence matrix has a zero eigenvalue; graph is not a tree")
    return OrientedTree(n_nodes, norm, B, lam)


def smallest_btb_eigenvalue(B: np.ndarray) -> float:
    """Smallest eigenvalue of B^T B via symmetric eigendecomposition.

    Strictly positive iff the columns of B are independent (the graph is a
    forest); a cycle yields 0.  Values within relative tolerance of zero are
    clamped to exactly 0.0 so callers get a clean non-tree diagnostic.
    """
    BtB = B.T @ B
    if BtB.size == 0:
        return 0.0
    vals = np.linalg.eigvalsh(BtB)
    lam = float(vals[0])
    scale = float(vals[-1]) if vals[-1] > 0 else 1.0
    if abs(lam) <= _EIG_RTOL * scale:
        return 0.0
    return lam


def spanning_tree(graph: GeneralGraph) -> OrientedTree:
    """BFS spanning tree rooted at node 1, visiting neighbors in ascending label order."""
    adj: dict[int, list[int]] = {i: [] for i in range(1, graph.n_nodes + 1)}
    for i, j in graph.edges:
        adj[i].append(j)
        adj[j].append(i)
    for u in adj:
        adj[u] = sorted(set(adj[u]))
    visited = {1}
    queue = [1]
    tree_edges = []
    while queue:
        u = queue.pop(0)
        for v in adj[u]:
            if v not in visited:
                visited.add(v)
                tree_edges.append((min(u, v), max(u, v)))
                queue.append(v)
    if len(visited) != graph.n_nodes:
        missing = sorted(set(range(1, graph.n_nodes + 1)) - visited)
        raise GraphError(f"graph is disconnected; nodes {missing} unreachable from node 1")
    return build_oriented_tree(graph.n_nodes, tree_edges)


def path_tree(n_nodes: int) -> OrientedTree:
    """The path 1-2-...-n, the default communication layer for the grid runs."""
    return build_oriented_tree(n_nodes, [(i, i + 1) for i in range(1, n_nodes)])


def star_tree(n_nodes: int, center: int = 1) -> OrientedTree:
    return build_oriented_tree(
        n_nodes, [(center, j) for j in range(1, n_nodes + 1) if j != center]
    )


def cyclic_triangle() -> GeneralGraph:
    """All-to-all triangle oriented as a directed 3-cycle: edges (1,2), (2,3), (3,1).

    Its incidence matrix annihilates the all-ones vector, which is what makes
    the stationary non-synchronized counterexample possible.
    """
    return make_general_graph(3, [(1, 2), (2, 3), (3, 1)])
