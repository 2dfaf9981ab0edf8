"""
Weighted undirected graphs and the exact reductions the estimator relies on.

A :class:`Graph` is an immutable edge list. Edge ids are positions in that
list; operations that change the edge set return a new graph with its own
ids. Incidence and Laplacian matrices are built on demand.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from treecount.errors import DisconnectedGraphError, GraphFormatError

MIN_WEIGHT = 1e-9
MAX_WEIGHT = 1e9


@dataclass(frozen=True, eq=False)
class Graph:
    """Weighted undirected multigraph on vertices ``0..n-1``.

    Parameters
    ----------
    n : int
        Number of vertices.
    u, v : array of int
        Edge endpoints; edge ``i`` joins ``u[i]`` and ``v[i]``.
    w : array of float
        Positive finite edge weights.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        u = np.ascontiguousarray(self.u, dtype=np.int64)
        v = np.ascontiguousarray(self.v, dtype=np.int64)
        w = np.ascontiguousarray(self.w, dtype=np.float64)
        if not (u.shape == v.shape == w.shape) or u.ndim != 1:
            raise ValueError("u, v, w must be 1-d arrays of equal length")
        if self.n < 1:
            raise ValueError("a graph needs at least one vertex")
        if u.size and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= self.n):
            raise ValueError("vertex id out of range")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("edge weights must be positive and finite")
        for arr in (u, v, w):
            arr.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple]) -> "Graph":
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples; missing weights are 1."""
        rows = [tuple(e) if len(e) == 3 else (e[0], e[1], 1.0) for e in edges]
        if not rows:
            return cls(n, np.empty(0), np.empty(0), np.empty(0))
        u, v, w = zip(*rows)
        return cls(n, np.array(u), np.array(v), np.array(w, dtype=float))

    @property
    def m(self) -> int:
        return int(self.u.size)

    def edges(self):
        """Iterate ``(u, v, w)`` triples in id order."""
        return zip(self.u.tolist(), self.v.tolist(), self.w.tolist())

    @cached_property
    def degree(self) -> np.ndarray:
        """Combinatorial degree (self-loops count twice)."""
        return np.bincount(np.concatenate([self.u, self.v]), minlength=self.n)

    @cached_property
    def adjacency(self) -> list[np.ndarray]:
        """Incident edge ids per vertex."""
        ends = np.concatenate([self.u, self.v])
        ids = np.concatenate([np.arange(self.m)] * 2)
        order = np.argsort(ends, kind="stable")
        splits = np.cumsum(np.bincount(ends, minlength=self.n))[:-1]
        return np.split(ids[order], splits)

    @cached_property
    def incidence(self) -> sp.csr_matrix:
        """The ``m x n`` signed incidence matrix, ``+1`` at ``u`` and ``-1`` at ``v``."""
        rows = np.repeat(np.arange(self.m), 2)
        cols = np.column_stack([self.u, self.v]).ravel()
        vals = np.tile([1.0, -1.0], self.m)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.m, self.n))

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        B = self.incidence
        return (B.T @ sp.diags(self.w) @ B).tocsr()

    def dense_laplacian(self) -> np.ndarray:
        L = np.zeros((self.n, self.n))
        np.add.at(L, (self.u, self.v), -self.w)
        np.add.at(L, (self.v, self.u), -self.w)
        np.add.at(L, (self.u, self.u), self.w)
        np.add.at(L, (self.v, self.v), self.w)
        return L

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.w, other.w)
        )

    __hash__ = None

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class EliminationResult:
    """Output of :func:`eliminate_low_degree`.

    ``log T(original) == log T(reduced) + delta``.
    """

    reduced: Graph
    delta: float


def load_graph(text: str) -> Graph:
    """Parse an edge-list document.

    Lines hold ``u v w`` with 0-based integer ids and a positive decimal
    weight; ``#`` starts a comment line and an optional ``p <n> <m>`` header
    fixes the vertex and edge counts. Without a header the vertex ids that
    occur are relabeled to ``0..n-1`` in increasing order.
    """
    header = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "p":
            if header is not None or rows:
                raise GraphFormatError("header must precede all edges", lineno)
            if len(parts) != 3:
                raise GraphFormatError("header must be 'p <n> <m>'", lineno)
            try:
                header = (int(parts[1]), int(parts[2]))
            except ValueError:
                raise GraphFormatError("header counts must be integers", lineno) from None
            if header[0] < 1 or header[1] < 0:
                raise GraphFormatError("header counts out of range", lineno)
            continue
        if len(parts) != 3:
            raise GraphFormatError(f"expected 'u v w', got {line!r}", lineno)
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError("vertex ids must be integers", lineno) from None
        try:
            w = float(parts[2])
        except ValueError:
            raise GraphFormatError(f"bad weight {parts[2]!r}", lineno) from None
        if a < 0 or b < 0:
            raise GraphFormatError("vertex ids must be non-negative", lineno)
        if not math.isfinite(w) or w <= 0:
            raise GraphFormatError(f"non-positive weight {parts[2]}", lineno)
        if not MIN_WEIGHT <= w <= MAX_WEIGHT:
            raise GraphFormatError(
                f"weight {parts[2]} outside supported range [{MIN_WEIGHT:g}, {MAX_WEIGHT:g}]",
                lineno,
            )
        if header is not None and max(a, b) >= header[0]:
            raise GraphFormatError(f"vertex id exceeds header count {header[0]}", lineno)
        rows.append((a, b, w))

    if header is not None:
        n, m = header
        if m != len(rows):
            raise GraphFormatError(f"header declares {m} edges, found {len(rows)}")
        return Graph.from_edges(n, rows)
    if not rows:
        raise GraphFormatError("no edges and no header")
    labels = sorted({x for a, b, _ in rows for x in (a, b)})
    index = {x: i for i, x in enumerate(labels)}
    return Graph.from_edges(len(labels), [(index[a], index[b], w) for a, b, w in rows])


def serialize(g: Graph) -> str:
    """Render ``g`` as an edge-list document that :func:`load_graph` reads back."""
    lines = [f"p {g.n} {g.m}"]
    lines += [f"{a} {b} {w!r}" for a, b, w in g.edges()]
    return "\n".join(lines) + "\n"


def read_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return load_graph(fh.read())


def validate_connected(g: Graph) -> bool:
    if g.n == 1:
        return True
    A = sp.coo_matrix((np.ones(g.m), (g.u, g.v)), shape=(g.n, g.n))
    ncomp, _ = connected_components(A, directed=False)
    return ncomp == 1


def normalize(g: Graph) -> Graph:
    """Drop self-loops and merge parallel edges by summing their weights.

    Each merged edge keeps the position and orientation of its first
    occurrence, so an already-simple graph comes back unchanged.
    """
    keep = g.u != g.v
    u, v, w = g.u[keep], g.v[keep], g.w[keep]
    key = np.minimum(u, v) * g.n + np.maximum(u, v)
    _, first, inverse = np.unique(key, return_index=True, return_inverse=True)
    if first.size == u.size and keep.all():
        return g
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    merged = np.zeros(first.size)
    np.add.at(merged, rank[inverse.ravel()], w)
    pos = first[order]
    return Graph(g.n, u[pos], v[pos], merged)


def eliminate_low_degree(g: Graph) -> EliminationResult:
    """Remove vertices of degree at most two while tracking ``log T``.

    A leaf with edge weight ``w`` is deleted and contributes ``log w``. A
    degree-2 vertex with edge weights ``w1, w2`` is replaced by a single edge
    of weight ``w1*w2/(w1+w2)`` between its neighbours and contributes
    ``log(w1 + w2)``. Parallel edges are merged as they appear, so degree is
    the number of distinct neighbours.
    """
    if not validate_connected(g):
        raise DisconnectedGraphError()
    g = normalize(g)
    if g.n <= 1 or g.degree.min() >= 3:
        return EliminationResult(g, 0.0)

    eu = g.u.tolist()
    ev = g.v.tolist()
    ew = g.w.tolist()
    alive = [True] * g.m
    adj: list[dict[int, int]] = [{} for _ in range(g.n)]
    for i, (a, b) in enumerate(zip(eu, ev)):
        adj[a][b] = i
        adj[b][a] = i

    removed = [False] * g.n
    remaining = g.n
    delta = 0.0
    queue = deque(x for x in range(g.n) if len(adj[x]) <= 2)
    while queue and remaining > 1:
        x = queue.popleft()
        if removed[x] or len(adj[x]) > 2:
            continue
        nbrs = adj[x]
        if len(nbrs) == 1:
            (y, e), = nbrs.items()
            delta += math.log(ew[e])
            alive[e] = False
            del adj[y][x]
            if len(adj[y]) <= 2:
                queue.append(y)
        elif len(nbrs) == 2:
            (y, e1), (z, e2) = nbrs.items()
            w1, w2 = ew[e1], ew[e2]
            delta += math.log(w1 + w2)
            alive[e1] = alive[e2] = False
            del adj[y][x]
            del adj[z][x]
            merged = w1 * w2 / (w1 + w2)
            if z in adj[y]:
                ew[adj[y][z]] += merged
            else:
                eu.append(y)
                ev.append(z)
                ew.append(merged)
                alive.append(True)
                adj[y][z] = adj[z][y] = len(ew) - 1
            for t in (y, z):
                if len(adj[t]) <= 2:
                    queue.append(t)
        else:
            # isolated vertex while others remain: input was disconnected
            raise DisconnectedGraphError()
        adj[x] = {}
        removed[x] = True
        remaining -= 1

    label = np.cumsum([not r for r in removed]) - 1
    ids = [i for i, ok in enumerate(alive) if ok]
    reduced = Graph(
        remaining,
        label[np.array(eu, dtype=np.int64)[ids]] if ids else np.empty(0),
        label[np.array(ev, dtype=np.int64)[ids]] if ids else np.empty(0),
        np.array(ew)[ids] if ids else np.empty(0),
    )
    return EliminationResult(reduced, delta)


def remove_edges(g: Graph, f) -> Graph:
    """Delete the edges with ids in ``f`` (an :class:`EdgeSubset` or id sequence)."""
    ids = np.asarray(getattr(f, "ids", f), dtype=np.int64).ravel()
    if ids.size and (ids.min() < 0 or ids.max() >= g.m):
        raise KeyError(f"unknown edge id in {ids.tolist()}")
    if ids.size == 0:
        return g
    keep = np.ones(g.m, dtype=bool)
    keep[ids] = False
    return Graph(g.n, g.u[keep], g.v[keep], g.w[keep])
