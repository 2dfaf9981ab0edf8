"""
Exact reference computations for small graphs.

Everything here is dense and cubic (or exponential, for the enumeration) in
the graph size. These functions are the ground truth the randomized code is
checked against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from treecount.errors import DisconnectedGraphError
from treecount.graph import Graph, validate_connected

BRUTE_FORCE_MAX_VERTICES = 10


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pairwise electrical correlations ``sqrt(w_e) b_e^T L^+ b_f sqrt(w_f)``.

    The diagonal holds the leverage scores of the edges in ``subset``.
    """

    subset: np.ndarray
    values: np.ndarray


def _grounded_cholesky(g: Graph):
    if not validate_connected(g):
        raise DisconnectedGraphError()
    Lg = g.dense_laplacian()[1:, 1:]
    try:
        c, lower = sla.cho_factor(Lg, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        raise DisconnectedGraphError("grounded Laplacian is numerically singular") from None
    pivots = np.diag(c)
    if pivots.min() <= 1e-14 * pivots.max():
        raise DisconnectedGraphError("grounded Laplacian is numerically singular")
    return c, lower


def exact_log_tree_count(g: Graph) -> float:
    """``log T(G)`` as the log-determinant of the Laplacian with vertex 0 removed."""
    if g.n == 1:
        return 0.0
    c, _ = _grounded_cholesky(g)
    return float(2.0 * np.log(np.diag(c)).sum())


def dense_pseudoinverse(g: Graph) -> np.ndarray:
    """``L^+`` from the grounded inverse, re-centred onto the complement of ones."""
    n = g.n
    if n == 1:
        return np.zeros((1, 1))
    c = _grounded_cholesky(g)
    G0 = np.zeros((n, n))
    G0[1:, 1:] = sla.cho_solve(c, np.eye(n - 1), check_finite=False)
    P = np.eye(n) - 1.0 / n
    Lp = P @ G0 @ P
    return (Lp + Lp.T) / 2


def exact_correlations(g: Graph, subset) -> CorrelationMatrix:
    """Dense correlation matrix for the edges in ``subset`` (``O(n^3)``)."""
    ids = np.asarray(getattr(subset, "ids", subset), dtype=np.int64).ravel()
    if ids.size == 0:
        raise ValueError("subset must be nonempty")
    Lp = dense_pseudoinverse(g)
    scale = np.sqrt(g.w[ids])
    # rows of W^{1/2} B restricted to the subset, applied to L^+
    X = Lp[g.u[ids]] - Lp[g.v[ids]]
    C = X[:, g.u[ids]] - X[:, g.v[ids]]
    C = scale[:, None] * C * scale[None, :]
    return CorrelationMatrix(ids, (C + C.T) / 2)


def leverage_scores(g: Graph) -> np.ndarray:
    """Exact leverage score of every edge."""
    Lp = dense_pseudoinverse(g)
    r = Lp[g.u, g.u] + Lp[g.v, g.v] - 2 * Lp[g.u, g.v]
    return g.w * r


def rho_of(c) -> float:
    """Largest off-diagonal absolute row sum: the tightest correlation level."""
    M = np.abs(np.asarray(getattr(c, "values", c), dtype=float))
    if M.shape[0] <= 1:
        return 0.0
    return float((M.sum(axis=1) - np.diag(M)).max())


def log_det_after_removal(g: Graph, subset) -> float:
    """``log det(I - C_F)`` for the correlation matrix ``C_F`` of ``subset``.

    By the determinant expansion this equals ``log T(G minus F) - log T(G)``.
    """
    C = exact_correlations(g, subset).values
    sign, logdet = np.linalg.slogdet(np.eye(C.shape[0]) - C)
    if sign <= 0:
        return -np.inf
    return float(logdet)


def logdet_diag_approx(msub) -> tuple[float, float]:
    """Compare ``sum(log diag M)`` with ``log det M``.

    Only defined where the Taylor bound applies: every diagonal entry at
    least 0.1 and every off-diagonal absolute row sum at most 0.01.

    Returns
    -------
    approx, exact : float
    """
    M = np.asarray(msub, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    d = np.diag(M)
    if np.any(d < 0.1):
        raise ValueError("diagonal entries must be at least 0.1")
    if rho_of(M) > 0.01:
        raise ValueError("off-diagonal row sums must be at most 0.01")
    sign, exact = np.linalg.slogdet(M)
    if sign <= 0:
        raise ValueError("matrix has non-positive determinant")
    return float(np.log(d).sum()), float(exact)


def brute_force_tree_weight(g: Graph) -> float:
    """Sum of spanning-tree weights by deletion and contraction.

    Refuses graphs with more than 10 vertices.
    """
    if g.n > BRUTE_FORCE_MAX_VERTICES:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_VERTICES}")
    edges = {}
    for a, b, w in g.edges():
        if a != b:
            key = (min(a, b), max(a, b))
            edges[key] = edges.get(key, 0.0) + w
    return _contract_delete(frozenset(range(g.n)), edges, {})


def _connected(vertices, edges) -> bool:
    start = next(iter(vertices))
    seen = {start}
    stack = [start]
    nbrs = {x: [] for x in vertices}
    for a, b in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    while stack:
        x = stack.pop()
        for y in nbrs[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == len(vertices)


def _contract_delete(vertices: frozenset, edges: dict, memo: dict) -> float:
    if len(vertices) == 1:
        return 1.0
    if not edges:
        return 0.0
    key = (vertices, frozenset(edges.items()))
    if key in memo:
        return memo[key]
    if not _connected(vertices, edges):
        memo[key] = 0.0
        return 0.0
    (a, b), w = next(iter(sorted(edges.items())))
    rest = {e: x for e, x in edges.items() if e != (a, b)}
    # contract b into a, merging any parallel edges that result
    merged = {}
    for (x, y), wx in rest.items():
        x = a if x == b else x
        y = a if y == b else y
        if x != y:
            k = (min(x, y), max(x, y))
            merged[k] = merged.get(k, 0.0) + wx
    total = _contract_delete(vertices, rest, memo)
    total += w * _contract_delete(vertices - {b}, merged, memo)
    memo[key] = total
    return total
