"""Graphs, graph shift operators and canonical test graphs.

Adjacency matrices follow the column-source convention: an edge ``(i, j)``
with weight ``w`` is stored at ``A[j, i] = w``, so that ``A @ x`` moves the
value of node ``i`` to node ``j``.  For undirected graphs the matrix is
symmetric and the convention is immaterial.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Graph",
    "ShiftOperator",
    "GSO_KINDS",
    "DENSE_CUTOFF",
    "from_edge_list",
    "gso",
    "custom_gso",
    "build_similarity_graph",
    "cycle_graph",
    "path_graph",
    "complete_graph",
    "star_graph",
    "grid_graph",
    "complete_bipartite_graph",
    "random_bipartite_graph",
    "erdos_renyi_graph",
    "sbm_graph",
    "permute",
    "hop_distances",
    "bipartition",
    "is_connected",
]

GSO_KINDS = (
    "adjacency",
    "laplacian",
    "normalized_adjacency",
    "normalized_laplacian",
    "random_walk_laplacian",
    "custom",
)

# Operators with at most this many nodes are applied through a dense array.
DENSE_CUTOFF = 64
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class Graph:
    """Weighted graph on nodes ``0..node_count-1``.

    Undirected graphs store each edge once with ``src < dst``.
    """

    node_count: int
    edges: tuple[tuple[int, int, float], ...]
    directed: bool = False

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be positive")
        for s, d, w in self.edges:
            if not (0 <= s < self.node_count and 0 <= d < self.node_count):
                raise ValueError(f"edge ({s}, {d}) has a node index outside [0, {self.node_count})")
            if not (np.isfinite(w) and w > 0):
                raise ValueError(f"edge ({s}, {d}) has non-positive or non-finite weight {w}")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def adjacency(self) -> sp.csr_matrix:
        """Weighted adjacency in CSR form with ``A[dst, src] = w``."""
        n = self.node_count
        if not self.edges:
            return sp.csr_matrix((n, n))
        src, dst, w = (np.array(c) for c in zip(*self.edges))
        src = src.astype(int)
        dst = dst.astype(int)
        w = w.astype(float)
        if not self.directed:
            src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
            w = np.concatenate([w, w])
        A = sp.csr_matrix((w, (dst, src)), shape=(n, n))
        A.sort_indices()
        return A

    def weight(self, i: int, j: int) -> float:
        return float(self.adjacency()[j, i])

    def degrees(self) -> np.ndarray:
        """Row sums of the adjacency (in-degree for directed graphs)."""
        return np.asarray(self.adjacency().sum(axis=1)).ravel()

    def neighbors(self, i: int) -> np.ndarray:
        A = self.adjacency()
        return A.indices[A.indptr[i]:A.indptr[i + 1]]

    def undirected_pairs(self) -> list[tuple[int, int]]:
        """Distinct unordered node pairs joined by at least one edge."""
        return sorted({(min(s, d), max(s, d)) for s, d, _ in self.edges})


def from_edge_list(rows: Iterable[Sequence], directed: bool = False,
                   node_count: int | None = None) -> Graph:
    """Build a graph from ``(src, dst, weight)`` rows.

    A missing weight defaults to 1.  Duplicate edges (in either orientation
    for undirected graphs) and self-loops are rejected; self-loops are only
    expressible through :func:`custom_gso`.
    """
    seen = set()
    edges = []
    max_idx = -1
    for row in rows:
        if len(row) == 2:
            s, d = row
            w = 1.0
        else:
            s, d, w = row
        if int(s) != s or int(d) != d:
            raise ValueError(f"node indices must be integers, got ({s}, {d})")
        s, d, w = int(s), int(d), float(w)
        if s < 0 or d < 0:
            raise ValueError(f"negative node index in edge ({s}, {d})")
        if not np.isfinite(w) or w <= 0:
            raise ValueError(f"edge ({s}, {d}) has non-positive weight {w}")
        if s == d:
            raise ValueError(f"self-loop at node {s}; use custom_gso for diagonal terms")
        key = (s, d) if directed else (min(s, d), max(s, d))
        if key in seen:
            raise ValueError(f"duplicate edge ({s}, {d})")
        seen.add(key)
        edges.append((key[0], key[1], w))
        max_idx = max(max_idx, s, d)
    n = max_idx + 1 if node_count is None else int(node_count)
    if max_idx >= n:
        raise ValueError(f"node index {max_idx} overflows node_count={n}")
    return Graph(n, tuple(edges), directed)


@dataclass(frozen=True, eq=False)
class ShiftOperator:
    """A graph shift operator: sparse ``N x N`` matrix plus its kind tag."""

    matrix: sp.csr_matrix
    kind: str = "custom"
    symmetric: bool = field(default=None)  # computed when omitted

    def __post_init__(self):
        if self.kind not in GSO_KINDS:
            raise ValueError(f"unknown GSO kind {self.kind!r}")
        M = sp.csr_matrix(self.matrix, dtype=float)
        M.sort_indices()
        if M.shape[0] != M.shape[1]:
            raise ValueError("a GSO must be square")
        if M.nnz and not np.all(np.isfinite(M.data)):
            raise ValueError("GSO has non-finite entries")
        object.__setattr__(self, "matrix", M)
        if self.symmetric is None:
            diff = abs(M - M.T)
            sym = (diff.max() if diff.nnz else 0.0) <= SYMMETRY_TOL
            object.__setattr__(self, "symmetric", bool(sym))
        object.__setattr__(self, "_dense", None)
        object.__setattr__(self, "_basis", None)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        if self._dense is None:
            D = self.matrix.toarray()
            D.setflags(write=False)
            object.__setattr__(self, "_dense", D)
        return self._dense

    @property
    def operator(self):
        """Dense array for small graphs, CSR matrix otherwise."""
        return self.dense() if self.n <= DENSE_CUTOFF else self.matrix

    def shift(self, z: np.ndarray) -> np.ndarray:
        return self.operator @ z

    def offdiag_support(self) -> set[tuple[int, int]]:
        M = self.matrix.tocoo()
        return {(int(r), int(c)) for r, c, v in zip(M.row, M.col, M.data) if r != c and v != 0}

    def basis(self):
        """Cached eigendecomposition (see :func:`graphfilt.spectral.eigendecompose`)."""
        if self._basis is None:
            from .spectral import eigendecompose
            object.__setattr__(self, "_basis", eigendecompose(self))
        return self._basis


def _check_support(M: sp.csr_matrix, g: Graph) -> None:
    A = g.adjacency()
    C = M.tocoo()
    for r, c, v in zip(C.row, C.col, C.data):
        if r != c and v != 0 and A[r, c] == 0:
            raise ValueError(f"GSO entry ({r}, {c}) lies outside the edge set")


def gso(g: Graph, kind: str = "laplacian") -> ShiftOperator:
    """Graph shift operator of a given kind.

    Parameters
    ----------
    g : Graph
    kind : {'adjacency', 'laplacian', 'normalized_adjacency',
            'normalized_laplacian', 'random_walk_laplacian'}
        ``L = D - A``, ``A_n = D^-1/2 A D^-1/2``, ``L_n = D^-1/2 L D^-1/2``,
        ``L_rw = D^-1 L`` with ``D = diag(A 1)``.

    Raises
    ------
    ValueError
        For normalized kinds when some node has zero degree.
    """
    if kind == "custom":
        raise ValueError("use custom_gso to wrap an arbitrary matrix")
    if kind not in GSO_KINDS:
        raise ValueError(f"unknown GSO kind {kind!r}")
    A = g.adjacency()
    deg = np.asarray(A.sum(axis=1)).ravel()
    if kind == "adjacency":
        return ShiftOperator(A, "adjacency")
    L = (sp.diags(deg) - A).tocsr()
    if kind == "laplacian":
        return ShiftOperator(L, "laplacian")
    zero = np.flatnonzero(deg <= 0)
    if zero.size:
        raise ValueError(f"{kind} requires positive degrees; node {zero[0]} is isolated"
                         + (" (zero out-degree)" if g.directed else ""))
    if kind == "random_walk_laplacian":
        return ShiftOperator((sp.diags(1.0 / deg) @ L).tocsr(), kind)
    Dm = sp.diags(1.0 / np.sqrt(deg))
    M = A if kind == "normalized_adjacency" else L
    return ShiftOperator((Dm @ M @ Dm).tocsr(), kind)


def custom_gso(matrix, graph: Graph | None = None) -> ShiftOperator:
    """Wrap an arbitrary matrix; when ``graph`` is given the support is validated."""
    M = sp.csr_matrix(np.asarray(matrix, dtype=float) if not sp.issparse(matrix) else matrix)
    if graph is not None:
        if M.shape != (graph.node_count, graph.node_count):
            raise ValueError("matrix shape does not match the graph")
        _check_support(M, graph)
    return ShiftOperator(M, "custom")


def build_similarity_graph(features, mode: str = "knn", theta: float = 1.0,
                           epsilon: float | None = None, k: int | None = None) -> Graph:
    """Undirected similarity graph with Gaussian weights ``exp(-dist / (2 theta^2))``.

    ``mode='epsilon'`` keeps pairs with ``dist <= epsilon``; ``'knn'`` links
    every node to its ``k`` nearest points and symmetrizes by union; ``'full'``
    links all pairs.  Pairs whose weight underflows to zero are dropped.
    """
    F = np.asarray(features, dtype=float)
    if F.ndim == 1:
        F = F[:, None]
    if theta <= 0:
        raise ValueError("kernel width theta must be positive")
    n = F.shape[0]
    dist = np.sqrt(np.maximum(((F[:, None, :] - F[None, :, :]) ** 2).sum(-1), 0.0))
    weights = np.exp(-dist / (2.0 * theta ** 2))
    if mode == "full":
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    elif mode == "epsilon":
        if epsilon is None or epsilon <= 0:
            raise ValueError("epsilon must be positive")
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if dist[i, j] <= epsilon]
    elif mode == "knn":
        if k is None or k < 1 or k >= n:
            raise ValueError(f"k must satisfy 1 <= k < N={n}")
        chosen = set()
        for i in range(n):
            d = dist[i].copy()
            d[i] = np.inf
            for j in np.argsort(d, kind="stable")[:k]:
                chosen.add((min(i, int(j)), max(i, int(j))))
        pairs = sorted(chosen)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    edges = tuple((i, j, float(weights[i, j])) for i, j in pairs if weights[i, j] > 0)
    return Graph(n, edges, False)


def cycle_graph(n: int) -> Graph:
    """Directed cycle with edges ``(i, i+1 mod N)``."""
    if n < 2:
        raise ValueError("cycle needs N >= 2")
    return Graph(n, tuple((i, (i + 1) % n, 1.0) for i in range(n)), True)


def path_graph(n: int, weight: float = 1.0) -> Graph:
    return Graph(n, tuple((i, i + 1, float(weight)) for i in range(n - 1)), False)


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((i, j, 1.0) for i in range(n) for j in range(i + 1, n)), False)


def star_graph(n: int) -> Graph:
    """Node 0 joined to nodes ``1..n-1``."""
    return Graph(n, tuple((0, j, 1.0) for j in range(1, n)), False)


def grid_graph(rows: int, cols: int) -> Graph:
    """4-connected lattice; node ``r*cols + c``."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1, 1.0))
            if r + 1 < rows:
                edges.append((i, i + cols, 1.0))
    return Graph(rows * cols, tuple(edges), False)


def complete_bipartite_graph(m: int, n: int) -> Graph:
    return Graph(m + n, tuple((i, m + j, 1.0) for i in range(m) for j in range(n)), False)


def _connect_components(n, edges, rng, sides=None):
    """Add random edges until the graph is connected."""
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for s, d, _ in edges:
        parent[find(s)] = find(d)
    present = {(s, d) for s, d, _ in edges}
    while len({find(i) for i in range(n)}) > 1:
        roots = sorted({find(i) for i in range(n)})
        a = [i for i in range(n) if find(i) == roots[0]]
        b = [i for i in range(n) if find(i) != roots[0]]
        for _ in range(1000):
            i, j = int(rng.choice(a)), int(rng.choice(b))
            if sides is None or sides[i] != sides[j]:
                break
        else:
            raise RuntimeError("could not connect components")
        key = (min(i, j), max(i, j))
        if key not in present:
            present.add(key)
            edges.append((key[0], key[1], float(rng.uniform(0.5, 1.5))))
        parent[find(i)] = find(j)
    return edges


def random_bipartite_graph(n1: int, n2: int, p: float, rng, connected: bool = True) -> Graph:
    """Random weighted bipartite graph with sides ``0..n1-1`` and ``n1..n1+n2-1``."""
    edges = [(i, n1 + j, float(rng.uniform(0.5, 1.5)))
             for i in range(n1) for j in range(n2) if rng.random() < p]
    if connected:
        sides = [0] * n1 + [1] * n2
        edges = _connect_components(n1 + n2, edges, rng, sides)
    return Graph(n1 + n2, tuple(sorted(edges)), False)


def erdos_renyi_graph(n: int, p: float, rng, weighted: bool = False,
                      connected: bool = True) -> Graph:
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j, float(rng.uniform(0.5, 1.5)) if weighted else 1.0))
    if connected:
        edges = _connect_components(n, edges, rng)
    return Graph(n, tuple(sorted(edges)), False)


def sbm_graph(sizes: Sequence[int], p_in: float, p_out: float, rng) -> tuple[Graph, np.ndarray]:
    """Stochastic block model; returns the graph and the block label of each node."""
    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = labels.size
    upper = np.triu(rng.random((n, n)), 1)
    prob = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    i, j = np.nonzero((upper > 0) & (upper < prob))
    return Graph(n, tuple((int(a), int(b), 1.0) for a, b in zip(i, j)), False), labels


def permute(S: ShiftOperator, perm: Sequence[int]) -> ShiftOperator:
    """Relabel nodes: returns ``P^T S P`` where ``(P^T S P)[i, j] = S[perm[i], perm[j]]``.

    The matching signal relabeling is ``x[perm]``.
    """
    perm = np.asarray(perm)
    if perm.ndim != 1 or perm.size != S.n or not np.array_equal(np.sort(perm), np.arange(S.n)):
        raise ValueError("perm must be a permutation of range(N)")
    M = S.matrix[perm][:, perm]
    return ShiftOperator(M, S.kind, S.symmetric)


def hop_distances(g: Graph, source: int) -> np.ndarray:
    """Unweighted hop distance from ``source`` (``inf`` when unreachable), ignoring direction."""
    A = g.adjacency()
    A = (A + A.T).tocsr()
    dist = np.full(g.node_count, np.inf)
    dist[source] = 0
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v in A.indices[A.indptr[u]:A.indptr[u + 1]]:
                if dist[v] == np.inf:
                    dist[v] = dist[u] + 1
                    nxt.append(int(v))
        frontier = nxt
    return dist


def is_connected(g: Graph) -> bool:
    return bool(np.all(np.isfinite(hop_distances(g, 0))))


def bipartition(g: Graph) -> tuple[np.ndarray, np.ndarray] | None:
    """Two-coloring of an undirected graph, or ``None`` when it is not bipartite."""
    A = g.adjacency()
    A = (A + A.T).tocsr()
    color = np.full(g.node_count, -1)
    for start in range(g.node_count):
        if color[start] >= 0:
            continue
        color[start] = 0
        stack = [start]
        while stack:
            u = stack.pop()
            for v in A.indices[A.indptr[u]:A.indptr[u + 1]]:
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    stack.append(int(v))
                elif color[v] == color[u]:
                    return None
    return np.flatnonzero(color == 0), np.flatnonzero(color == 1)
