"""Random graph fixtures used by the verification suites and benchmarks."""

from __future__ import annotations

import numpy as np

from treecount.graph import Graph, normalize


def random_connected_graph(n, extra_edges, rng, weights=(1.0,)):
    """A random spanning tree on ``n`` vertices plus ``extra_edges`` random edges.

    Duplicate extra edges are merged (weights add), so the result may have
    slightly fewer than ``n - 1 + extra_edges`` edges.
    """
    if n == 1:
        return Graph(1, np.empty(0), np.empty(0), np.empty(0))
    perm = rng.permutation(n)
    parents = np.array([rng.integers(0, i) for i in range(1, n)])
    u = list(perm[1:])
    v = list(perm[parents])
    if n > 2 and extra_edges > 0:
        a = rng.integers(0, n, size=extra_edges)
        b = (a + rng.integers(1, n, size=extra_edges)) % n
        u += list(a)
        v += list(b)
    w = rng.choice(np.asarray(weights, dtype=float), size=len(u))
    return normalize(Graph(n, np.array(u), np.array(v), w))


def small_corpus(count, rng, max_n=9, weights=(0.5, 1.0, 2.0)):
    """Connected graphs with 2 to ``max_n`` vertices and varied density."""
    graphs = []
    for _ in range(count):
        n = int(rng.integers(2, max_n + 1))
        extra = int(rng.integers(0, n * (n - 1) // 2))
        graphs.append(random_connected_graph(n, extra, rng, weights))
    return graphs


def random_graph_with_edges(n, m, rng, weights=(1.0,)):
    """Connected simple graph with ``n`` vertices and about ``m`` edges."""
    return random_connected_graph(n, max(0, m - (n - 1)), rng, weights)


def random_regular_graph(d, n, seed):
    """Uniform random ``d``-regular graph (rejecting disconnected draws)."""
    import networkx as nx  # slow to import and needed only here

    rng = np.random.default_rng(seed)
    while True:
        G = nx.random_regular_graph(d, n, seed=int(rng.integers(2**31)))
        if nx.is_connected(G):
            break
    e = np.array(G.edges(), dtype=np.int64).reshape(-1, 2)
    return Graph(n, e[:, 0], e[:, 1], np.ones(len(e)))


def cycle(n, w=1.0):
    return Graph.from_edges(n, [(i, (i + 1) % n, w) for i in range(n)])


def complete(n, w=1.0):
    return Graph.from_edges(n, [(i, j, w) for i in range(n) for j in range(i + 1, n)])


def path(weights):
    return Graph.from_edges(len(weights) + 1, [(i, i + 1, w) for i, w in enumerate(weights)])
