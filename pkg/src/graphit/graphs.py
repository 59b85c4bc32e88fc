"""Graph container and the basic matrices everything else consumes.

Graphs are undirected, without self-loops or edge weights, and carry one
discrete label per node. All matrices are dense float64 numpy arrays; the
benchmark graphs are small enough that sparse storage buys nothing.

Isolated nodes need a convention for degree normalization: we define the
D^{-1/2} factor entrywise as 0 when the degree is 0. An isolated node
therefore gets a zero row/column in D^{-1/2} A D^{-1/2} and a zero diagonal
entry in the normalized Laplacian (it contributes a zero eigenvalue).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph with discrete node labels.

    Attributes:
        n: number of nodes; node indices are 0..n-1.
        edges: unordered pairs (u, v) with u < v, no self-loops, no duplicates.
        node_labels: one non-negative integer per node.
        graph_label: optional class id (int) or regression target (float).
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    node_labels: tuple[int, ...]
    graph_label: int | float | None = None

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError(f"graph must have at least one node, got n={self.n}")
        canon = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u},{v}) out of range for n={self.n}")
            e = (u, v) if u < v else (v, u)
            if e in canon:
                raise ValueError(f"duplicate edge {e}")
            canon.add(e)
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        if len(self.node_labels) != self.n:
            raise ValueError(
                f"expected {self.n} node labels, got {len(self.node_labels)}"
            )
        if any(l < 0 for l in self.node_labels):
            raise ValueError("node labels must be non-negative")
        object.__setattr__(self, "node_labels", tuple(int(l) for l in self.node_labels))


def adjacency(g: Graph) -> np.ndarray:
    """Dense symmetric 0/1 adjacency matrix with zero diagonal."""
    a = np.zeros((g.n, g.n))
    for u, v in g.edges:
        a[u, v] = 1.0
        a[v, u] = 1.0
    return a


def degree_vector(g: Graph) -> np.ndarray:
    """Number of incident edges per node, as an int64 vector."""
    d = np.zeros(g.n, dtype=np.int64)
    for u, v in g.edges:
        d[u] += 1
        d[v] += 1
    return d


def inv_sqrt_degrees(g: Graph) -> np.ndarray:
    """deg^{-1/2} per node, with the entry for degree-0 nodes set to 0."""
    d = degree_vector(g).astype(float)
    out = np.zeros(g.n)
    nz = d > 0
    out[nz] = 1.0 / np.sqrt(d[nz])
    return out


def normalized_laplacian(g: Graph) -> np.ndarray:
    """Symmetric normalized Laplacian I - D^{-1/2} A D^{-1/2}.

    Isolated nodes get a zero row/column (diagonal 0, not 1), so they
    contribute a zero eigenvalue rather than a spurious unit one.
    """
    a = adjacency(g)
    dis = inv_sqrt_degrees(g)
    lap = -(dis[:, None] * a * dis[None, :])
    deg = degree_vector(g)
    for i in range(g.n):
        lap[i, i] = 1.0 if deg[i] > 0 else 0.0
    return lap


def adjacency_lists(g: Graph) -> list[list[int]]:
    """Neighbor lists, each sorted ascending (fixes traversal order)."""
    nbrs: list[list[int]] = [[] for _ in range(g.n)]
    for u, v in g.edges:
        nbrs[u].append(v)
        nbrs[v].append(u)
    for lst in nbrs:
        lst.sort()
    return nbrs


def permute(g: Graph, perm) -> Graph:
    """Relabel nodes so that new index perm[i] hosts old node i.

    adjacency(permute(g)) == P @ adjacency(g) @ P.T for the permutation
    matrix P with P[perm[i], i] = 1.
    """
    perm = list(perm)
    if sorted(perm) != list(range(g.n)):
        raise ValueError("perm is not a permutation of node indices")
    new_edges = tuple((perm[u], perm[v]) for u, v in g.edges)
    new_labels = [0] * g.n
    for i, lab in enumerate(g.node_labels):
        new_labels[perm[i]] = lab
    return Graph(g.n, new_edges, tuple(new_labels), g.graph_label)


def permutation_matrix(perm) -> np.ndarray:
    perm = list(perm)
    p = np.zeros((len(perm), len(perm)))
    for i, j in enumerate(perm):
        p[j, i] = 1.0
    return p


def erdos_renyi(n: int, edge_prob: float, rng: np.random.Generator,
                n_labels: int = 1) -> Graph:
    """Random graph with independent edges; handy for demos and stress tests."""
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < edge_prob:
                edges.append((u, v))
    labels = tuple(int(x) for x in rng.integers(0, n_labels, size=n))
    return Graph(n, tuple(edges), labels)


def bfs_distances(g: Graph, source: int) -> np.ndarray:
    """Hop distances from source; unreachable nodes get -1."""
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[source] = 0
    frontier = [source]
    nbrs = adjacency_lists(g)
    while frontier:
        nxt = []
        for u in frontier:
            for v in nbrs[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist
