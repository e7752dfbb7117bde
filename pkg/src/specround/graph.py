"""Undirected weighted, costed multigraphs and their spectral quantities."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import Disconnected, GraphError, GraphFormatError, InvalidCut
from .linalg import psd_fn, sym


@dataclass(frozen=True)
class Graph:
    """Edge list on vertices ``0..n-1``; parallel edges are distinct entries.

    Edge order is significant: downstream tie-breaking uses edge indices.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    weight: np.ndarray
    cost: np.ndarray

    def __post_init__(self):
        n = int(self.n)
        if n < 0:
            raise GraphError("vertex count must be nonnegative")
        u = np.asarray(self.u, dtype=np.int64).reshape(-1)
        v = np.asarray(self.v, dtype=np.int64).reshape(-1)
        w = np.asarray(self.weight, dtype=float).reshape(-1)
        c = np.asarray(self.cost, dtype=float).reshape(-1)
        if not (u.shape == v.shape == w.shape == c.shape):
            raise GraphError("edge arrays must have equal length")
        if u.size and (u.min() < 0 or v.min() < 0 or u.max() >= n or v.max() >= n):
            raise GraphError("edge endpoint out of range")
        if np.any(u == v):
            raise GraphError("self loops are not allowed")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(c))):
            raise GraphError("weights and costs must be finite")
        if np.any(w < 0) or np.any(c < 0):
            raise GraphError("weights and costs must be nonnegative")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "cost", c)

    @classmethod
    def from_edges(cls, n: int, edges, weights=None, costs=None) -> "Graph":
        edges = list(edges)
        m = len(edges)
        u = [e[0] for e in edges]
        v = [e[1] for e in edges]
        w = np.ones(m) if weights is None else weights
        c = np.ones(m) if costs is None else costs
        return cls(n, u, v, w, c)

    @classmethod
    def complete(cls, n: int, weight: float = 1.0, cost: float = 1.0) -> "Graph":
        edges = list(combinations(range(n), 2))
        m = len(edges)
        return cls.from_edges(n, edges, np.full(m, weight), np.full(m, cost))

    @property
    def m(self) -> int:
        return int(self.u.shape[0])

    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.u.tolist(), self.v.tolist()))

    def with_weights(self, weights) -> "Graph":
        return Graph(self.n, self.u, self.v, weights, self.cost)

    def subgraph(self, edge_mask) -> "Graph":
        """Keep the edges where ``edge_mask`` is true (vertex set unchanged)."""
        keep = np.asarray(edge_mask, dtype=bool)
        return Graph(self.n, self.u[keep], self.v[keep], self.weight[keep], self.cost[keep])

    def incidence(self) -> np.ndarray:
        """``(m, n)`` matrix whose row ``e`` is ``b_e = chi_u - chi_v``."""
        B = np.zeros((self.m, self.n))
        idx = np.arange(self.m)
        B[idx, self.u] = 1.0
        B[idx, self.v] = -1.0
        return B

    def degrees(self, use_weights: bool = True) -> np.ndarray:
        w = self.weight if use_weights else np.ones(self.m)
        d = np.zeros(self.n)
        np.add.at(d, self.u, w)
        np.add.at(d, self.v, w)
        return d

    def max_degree(self) -> int:
        """Largest unweighted degree (parallel edges counted separately)."""
        return int(self.degrees(use_weights=False).max()) if self.n else 0


def _edge_weights(G: Graph, use_weights: bool, weights=None) -> np.ndarray:
    if weights is not None:
        return np.asarray(weights, dtype=float)
    return G.weight if use_weights else np.ones(G.m)


def adjacency(G: Graph, use_weights: bool = True, weights=None) -> np.ndarray:
    w = _edge_weights(G, use_weights, weights)
    A = np.zeros((G.n, G.n))
    np.add.at(A, (G.u, G.v), w)
    np.add.at(A, (G.v, G.u), w)
    return A


def degree_matrix(G: Graph, use_weights: bool = True, weights=None) -> np.ndarray:
    w = _edge_weights(G, use_weights, weights)
    d = np.zeros(G.n)
    np.add.at(d, G.u, w)
    np.add.at(d, G.v, w)
    return np.diag(d)


def laplacian(G: Graph, use_weights: bool = True, weights=None) -> np.ndarray:
    """``L = D - A``. With ``use_weights=False`` every edge has weight one.

    ``weights`` overrides the stored edge weights (for example a rounded
    zero-one selection).
    """
    return sym(degree_matrix(G, use_weights, weights) - adjacency(G, use_weights, weights))


def signless_laplacian(G: Graph, use_weights: bool = True, weights=None) -> np.ndarray:
    """``L+ = D + A``."""
    return sym(degree_matrix(G, use_weights, weights) + adjacency(G, use_weights, weights))


def components(G: Graph, weights=None) -> np.ndarray:
    """Component label of each vertex in the positive-weight subgraph."""
    w = _edge_weights(G, True, weights)
    keep = w > 0
    A = coo_matrix((np.ones(int(keep.sum())), (G.u[keep], G.v[keep])), shape=(G.n, G.n))
    _, labels = connected_components(A, directed=False)
    return labels


def is_connected(G: Graph, weights=None) -> bool:
    if G.n <= 1:
        return True
    return bool(np.all(components(G, weights) == components(G, weights)[0]))


def effective_resistance(G: Graph, s: int, t: int, weights=None) -> float:
    """``b_st^T L^+ b_st`` with edge conductances ``weights`` (default stored)."""
    if not (0 <= s < G.n and 0 <= t < G.n):
        raise GraphError("vertex out of range")
    if s == t:
        return 0.0
    labels = components(G, weights)
    if labels[s] != labels[t]:
        raise Disconnected(f"vertices {s} and {t} are not connected")
    Lp = psd_fn(laplacian(G, True, weights), "pinv")
    b = np.zeros(G.n)
    b[s], b[t] = 1.0, -1.0
    return float(b @ Lp @ b)


def resistance_matrix(G: Graph, weights=None) -> np.ndarray:
    """All-pairs effective resistances (``inf`` across components)."""
    Lp = psd_fn(laplacian(G, True, weights), "pinv")
    d = np.diag(Lp)
    R = d[:, None] + d[None, :] - 2.0 * Lp
    labels = components(G, weights)
    R[labels[:, None] != labels[None, :]] = np.inf
    np.fill_diagonal(R, 0.0)
    return R


def algebraic_connectivity(G: Graph, weights=None) -> float:
    """Second-smallest Laplacian eigenvalue."""
    if G.n < 2:
        raise GraphError("algebraic connectivity needs at least two vertices")
    lam = np.linalg.eigvalsh(laplacian(G, True, weights))
    return float(max(lam[1], 0.0))


def _cut_mask(G: Graph, S) -> np.ndarray:
    mask = np.zeros(G.n, dtype=bool)
    idx = np.asarray(list(S), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= G.n):
        raise InvalidCut("cut vertex out of range")
    mask[idx] = True
    k = int(mask.sum())
    if k == 0 or k == G.n:
        raise InvalidCut("cut side must be a nonempty proper subset")
    return mask


def cut_edges(G: Graph, S) -> np.ndarray:
    """Boolean mask of edges crossing ``(S, V \\ S)``."""
    mask = _cut_mask(G, S)
    return mask[G.u] != mask[G.v]


def cut_weight(G: Graph, S, weights=None) -> float:
    """Total weight of edges crossing ``(S, V \\ S)``."""
    w = _edge_weights(G, True, weights)
    return float(w[cut_edges(G, S)].sum())


def read_edge_list(path) -> Graph:
    """Parse the edge-list format: header ``n m`` then ``u v weight cost`` lines."""
    text = Path(path).read_text()
    return parse_edge_list(text)


def parse_edge_list(text: str) -> Graph:
    header = None
    rows: list[tuple[int, int, float, float]] = []
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        last_line = lineno
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 2:
                raise GraphFormatError("header must be 'n m'", lineno)
            try:
                header = (int(parts[0]), int(parts[1]))
            except ValueError:
                raise GraphFormatError("header values must be integers", lineno) from None
            if header[0] < 0 or header[1] < 0:
                raise GraphFormatError("header values must be nonnegative", lineno)
            continue
        if len(parts) != 4:
            raise GraphFormatError(f"expected 'u v weight cost', got {len(parts)} fields", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
            w, c = float(parts[2]), float(parts[3])
        except ValueError:
            raise GraphFormatError("could not parse edge fields", lineno) from None
        n = header[0]
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"endpoint out of range for n={n}", lineno)
        if u == v:
            raise GraphFormatError("self loops are not allowed", lineno)
        if not (np.isfinite(w) and np.isfinite(c)) or w < 0 or c < 0:
            raise GraphFormatError("weight and cost must be finite and nonnegative", lineno)
        if len(rows) >= header[1]:
            raise GraphFormatError(f"more edges than the declared m={header[1]}", lineno)
        rows.append((u, v, w, c))
    if header is None:
        raise GraphFormatError("missing header line", max(last_line, 1))
    if len(rows) != header[1]:
        raise GraphFormatError(
            f"declared m={header[1]} edges but found {len(rows)}", max(last_line, 1)
        )
    if not rows:
        return Graph(header[0], [], [], [], [])
    u, v, w, c = zip(*rows)
    return Graph(header[0], u, v, w, c)


def format_edge_list(G: Graph) -> str:
    lines = [f"{G.n} {G.m}"]
    for u, v, w, c in zip(G.u.tolist(), G.v.tolist(), G.weight.tolist(), G.cost.tolist()):
        lines.append(f"{u} {v} {w!r} {c!r}")
    return "\n".join(lines) + "\n"


def write_edge_list(G: Graph, path) -> None:
    Path(path).write_text(format_edge_list(G))
