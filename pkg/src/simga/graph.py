"""Undirected sparse graph container, ingestion, and the random-walk transition matrix.

Graphs are stored CSR-style (offsets + concatenated sorted neighbor lists).
They are plain containers: immutable by convention after construction, safe to
share across threads. Self-loops are dropped and duplicate edges collapsed at
ingestion; node ids are dense 0-based integers and are never remapped, so gaps
in the id range become isolated nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np
import scipy.sparse as sp

from .errors import InputFormatError, ParameterError

__all__ = [
    "Graph",
    "TransitionMatrix",
    "build_graph",
    "load_edge_list",
    "node_homophily",
    "transition",
    "random_graph",
    "random_connected_graph",
]


@dataclass
class Graph:
    """Symmetric, self-loop-free graph over nodes 0..n-1.

    offsets has length n+1 with offsets[-1] == 2*m; neighbors(u) is the
    strictly increasing slice neighbors[offsets[u]:offsets[u+1]].
    """

    n: int
    m: int
    offsets: np.ndarray
    neighbors: np.ndarray
    degrees: np.ndarray
    _adj_csr: sp.csr_matrix | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.offsets = np.asarray(self.offsets, dtype=np.int64)
        self.neighbors = np.asarray(self.neighbors, dtype=np.int64)
        self.degrees = np.asarray(self.degrees, dtype=np.int64)
        _check_invariants(self)

    def neighbor_slice(self, u: int) -> np.ndarray:
        return self.neighbors[self.offsets[u] : self.offsets[u + 1]]

    def adjacency_csr(self) -> sp.csr_matrix:
        """Binary adjacency matrix as float64 CSR (built once, then cached)."""
        if self._adj_csr is None:
            data = np.ones(len(self.neighbors), dtype=np.float64)
            self._adj_csr = sp.csr_matrix(
                (data, self.neighbors.copy(), self.offsets.copy()), shape=(self.n, self.n)
            )
        return self._adj_csr


def _check_invariants(g: Graph) -> None:
    if g.offsets.shape != (g.n + 1,):
        raise InputFormatError("offsets must have length n+1")
    if g.offsets[0] != 0 or g.offsets[-1] != 2 * g.m:
        raise InputFormatError("offsets must start at 0 and end at 2m")
    if np.any(np.diff(g.offsets) < 0):
        raise InputFormatError("offsets must be monotone nondecreasing")
    if not np.array_equal(np.diff(g.offsets), g.degrees):
        raise InputFormatError("degrees inconsistent with offsets")
    if int(g.degrees.sum()) != 2 * g.m:
        raise InputFormatError("degree sum must equal 2m")
    if len(g.neighbors) and (g.neighbors.min() < 0 or g.neighbors.max() >= g.n):
        raise InputFormatError("neighbor id out of range")
    for u in range(g.n):
        nb = g.neighbor_slice(u)
        if nb.size and np.any(np.diff(nb) <= 0):
            raise InputFormatError(f"neighbor list of node {u} not strictly increasing")
        if np.any(nb == u):
            raise InputFormatError(f"self-loop at node {u}")
    # symmetry: u in N(v) iff v in N(u)
    a = g.adjacency_csr()
    if abs(a - a.T).nnz != 0:
        raise InputFormatError("adjacency not symmetric")


def build_graph(n: int, edges: Iterable[tuple[int, int]]) -> Graph:
    """Assemble a Graph from undirected edge pairs (either orientation, dups ok)."""
    seen: set[tuple[int, int]] = set()
    for u, v in edges:
        if u == v:
            continue
        seen.add((u, v) if u < v else (v, u))
    m = len(seen)
    if m:
        arr = np.array(sorted(seen), dtype=np.int64)
        both = np.concatenate([arr, arr[:, ::-1]])
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        src, dst = both[:, 0], both[:, 1]
    else:
        src = dst = np.empty(0, dtype=np.int64)
    degrees = np.bincount(src, minlength=n).astype(np.int64)
    offsets = np.concatenate([[0], np.cumsum(degrees)]).astype(np.int64)
    return Graph(n=n, m=m, offsets=offsets, neighbors=dst, degrees=degrees)


def load_edge_list(source: IO[str] | Iterable[str]) -> Graph:
    """Parse a "u v" edge list; '#'-prefixed and blank lines are ignored.

    Ids are nonnegative integers; the graph spans 0..max_id, so unreferenced
    ids in that range come out isolated. Raises InputFormatError with the
    offending 1-based line number on malformed input, and on empty input.
    """
    edges: list[tuple[int, int]] = []
    max_id = -1
    for lineno, line in enumerate(source, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        if len(parts) != 2:
            raise InputFormatError(f"line {lineno}: expected two node ids, got {len(parts)} tokens")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise InputFormatError(f"line {lineno}: non-integer node id") from None
        if u < 0 or v < 0:
            raise InputFormatError(f"line {lineno}: negative node id")
        max_id = max(max_id, u, v)
        edges.append((u, v))
    if max_id < 0:
        raise InputFormatError("empty edge list")
    return build_graph(max_id + 1, edges)


def node_homophily(g: Graph, labels: np.ndarray) -> float:
    """Average fraction of same-label neighbors, over non-isolated nodes."""
    labels = np.asarray(labels)
    if labels.shape != (g.n,):
        raise ParameterError(f"labels must have length {g.n}")
    active = g.degrees > 0
    if not active.any():
        raise ParameterError("homophily undefined: all nodes isolated")
    rep = np.repeat(np.arange(g.n), g.degrees)
    same = (labels[rep] == labels[g.neighbors]).astype(np.float64)
    sums = np.zeros(g.n)
    np.add.at(sums, rep, same)
    return float((sums[active] / g.degrees[active]).mean())


@dataclass
class TransitionMatrix:
    """Row-stochastic random-walk matrix: row u holds 1/deg(u) at each neighbor.

    Rows of isolated nodes are all-zero (walk mass is absorbed there).
    """

    graph: Graph
    inv_degree: np.ndarray
    csr: sp.csr_matrix = field(repr=False)

    @property
    def n(self) -> int:
        return self.graph.n

    def propagate(self, x: np.ndarray) -> np.ndarray:
        """One walk step: returns x @ P for a vector or matrix of rows."""
        return x @ self.csr

    def dense(self) -> np.ndarray:
        return self.csr.toarray()


def transition(g: Graph) -> TransitionMatrix:
    inv_degree = np.zeros(g.n)
    nz = g.degrees > 0
    inv_degree[nz] = 1.0 / g.degrees[nz]
    data = np.repeat(inv_degree, g.degrees)
    csr = sp.csr_matrix((data, g.neighbors.copy(), g.offsets.copy()), shape=(g.n, g.n))
    return TransitionMatrix(graph=g, inv_degree=inv_degree, csr=csr)


def random_graph(
    n: int,
    avg_degree: float,
    seed: int,
    min_degree: int = 0,
) -> Graph:
    """Uniform random graph with a target average degree and optional degree floor.

    The floor matters for similarity-fidelity tests: very low-degree near-twin
    structures (pendant siblings, isolated squares) carry the largest
    linearization gap between the walk-series object and true SimRank.
    """
    if n < 2:
        raise ParameterError("need at least two nodes")
    if min_degree >= n:
        raise ParameterError("min_degree must be below n")
    rng = np.random.default_rng(seed)
    target_m = min(int(round(avg_degree * n / 2.0)), n * (n - 1) // 2)
    edges: set[tuple[int, int]] = set()
    while len(edges) < target_m:
        u, v = rng.integers(0, n, size=2)
        if u != v:
            edges.add((min(int(u), int(v)), max(int(u), int(v))))
    if min_degree > 0:
        deg = np.zeros(n, dtype=np.int64)
        for u, v in edges:
            deg[u] += 1
            deg[v] += 1
        for u in range(n):
            while deg[u] < min_degree:
                v = int(rng.integers(0, n))
                e = (min(u, v), max(u, v))
                if u != v and e not in edges:
                    edges.add(e)
                    deg[u] += 1
                    deg[v] += 1
    return build_graph(n, edges)


def random_connected_graph(n: int, extra_edges: int, seed: int) -> Graph:
    """Random recursive tree plus uniformly sampled extra edges; always connected."""
    if n < 2:
        raise ParameterError("need at least two nodes")
    rng = np.random.default_rng(seed)
    edges: set[tuple[int, int]] = set()
    order = rng.permutation(n)
    for i in range(1, n):
        u = int(order[i])
        v = int(order[rng.integers(0, i)])
        edges.add((min(u, v), max(u, v)))
    want = len(edges) + extra_edges
    cap = n * (n - 1) // 2
    while len(edges) < min(want, cap):
        u, v = rng.integers(0, n, size=2)
        if u != v:
            edges.add((min(int(u), int(v)), max(int(u), int(v))))
    return build_graph(n, edges)
