"""
Laplacian solves and sketched leverage scores.

Small graphs get a dense grounded factorization whose accuracy is certified
once at build time. Larger graphs use block conjugate gradient with a
Jacobi preconditioner. Either way :meth:`LaplacianOperator.solve` returns
``x`` orthogonal to the all-ones vector with ``||L x - b|| <= tol ||b||``
for the projected right-hand side ``b``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from treecount.errors import DisconnectedGraphError, SolverError
from treecount.graph import Graph, validate_connected

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DENSE_MAX_VERTICES = 1500
JL_CONSTANT = 4.0
# dense entries per sketch batch (m x batch)
_BATCH_ENTRIES = 1 << 22


def _center(X):
    return X - X.mean(axis=0, keepdims=True)


class LaplacianOperator:
    """Approximate ``L^+`` for a connected graph.

    Parameters
    ----------
    graph : Graph
        Connected graph.
    tol : float
        Relative residual target for every solve.
    max_iter : int, optional
        Conjugate gradient cap; defaults to ``10 sqrt(m) log(1/tol)``.
    dense_max : int
        Largest vertex count that gets a dense factorization.
    """

    def __init__(self, graph: Graph, tol=DEFAULT_TOL, max_iter=None, dense_max=DENSE_MAX_VERTICES):
        if not validate_connected(graph):
            raise DisconnectedGraphError()
        if not 0 < tol < 1:
            raise ValueError("tol must lie in (0, 1)")
        self.graph = graph
        self.tol = tol
        self.L = graph.laplacian
        self.max_iter = max_iter or math.ceil(10 * math.sqrt(max(graph.m, 1)) * math.log(1 / tol))
        self.certified = False
        n = graph.n
        if n <= dense_max:
            self.kind = "factorization"
            self._ginv = np.zeros((0, 0))
            if n > 1:
                Lg = self.L[1:, 1:].toarray()
                try:
                    c = sla.cho_factor(Lg, lower=True, check_finite=False)
                except np.linalg.LinAlgError:
                    raise DisconnectedGraphError("grounded Laplacian is singular") from None
                self._ginv = sla.cho_solve(c, np.eye(n - 1), check_finite=False)
                # L G0 b == b for every b orthogonal to ones iff L[:, 1:] Ginv == [-1^T; I]
                E = self.L[:, 1:] @ self._ginv
                E[0] += 1.0
                E[1:] -= np.eye(n - 1)
                self.certified = bool(np.linalg.norm(E) <= tol)
            else:
                self.certified = True
        else:
            self.kind = "diagonal"
            self._dinv = 1.0 / self.L.diagonal()

    def _precondition(self, R):
        if self.kind == "factorization":
            Z = np.zeros_like(R)
            Z[1:] = self._ginv @ R[1:]
            return _center(Z)
        return _center(self._dinv[:, None] * R)

    def solve(self, b) -> np.ndarray:
        """Approximate ``L^+ b`` for a single vector."""
        return self.solve_many(np.asarray(b, dtype=float)[:, None])[:, 0]

    def solve_many(self, B) -> np.ndarray:
        """Solve for every column of ``B`` (shape ``n x k``)."""
        B = _center(np.asarray(B, dtype=float))
        if self.graph.n == 1 or B.shape[1] == 0:
            return np.zeros_like(B)
        if self.kind == "factorization":
            X = self._precondition(B)
            if self.certified:
                return X
        else:
            X = np.zeros_like(B)
        return self._pcg(B, X)

    def _pcg(self, B, X):
        L = self.L
        bnorm = np.linalg.norm(B, axis=0)
        target = self.tol * bnorm
        R = B - L @ X
        act = np.flatnonzero(np.linalg.norm(R, axis=0) > target)
        if act.size:
            Ra = R[:, act]
            Za = self._precondition(Ra)
            Pa = Za.copy()
            rz = np.einsum("ij,ij->j", Ra, Za)
            Xa = X[:, act]
            ta = target[act]
            for _ in range(self.max_iter):
                AP = L @ Pa
                alpha = rz / np.einsum("ij,ij->j", Pa, AP)
                Xa += alpha * Pa
                Ra -= alpha * AP
                done = np.linalg.norm(Ra, axis=0) <= ta
                if done.any():
                    X[:, act[done]] = Xa[:, done]
                    keep = ~done
                    act, Xa, Ra, Pa, rz, ta = act[keep], Xa[:, keep], Ra[:, keep], Pa[:, keep], rz[keep], ta[keep]
                    if not act.size:
                        break
                Za = self._precondition(Ra)
                rz_new = np.einsum("ij,ij->j", Ra, Za)
                Pa = Za + (rz_new / rz) * Pa
                rz = rz_new
            else:
                X[:, act] = Xa
        X = _center(X)
        res = np.linalg.norm(B - L @ X, axis=0)
        scale = np.where(bnorm > 0, bnorm, 1.0)
        worst = float((res / scale).max())
        # the recurrence residual drifts slightly from the true one
        if worst > 10 * self.tol:
            raise SolverError("conjugate gradient hit its iteration cap", worst)
        return X


def build_operator(g: Graph, tol=DEFAULT_TOL, **kwargs) -> LaplacianOperator:
    return LaplacianOperator(g, tol, **kwargs)


def solve(op: LaplacianOperator, b) -> np.ndarray:
    return op.solve(b)


@dataclass(frozen=True)
class LeverageEstimates:
    """Per-edge leverage estimates.

    ``regime`` is ``"multiplicative"`` (values within a ``1 +- parameter``
    factor of the truth) or ``"additive"`` (within ``2 * parameter``).
    ``ids`` names the edge each value belongs to.
    """

    values: np.ndarray
    regime: str
    parameter: float
    ids: np.ndarray


_SIGNS = np.array([-1.0, 1.0])


def rademacher(rng, shape):
    """Independent uniform +-1 entries, eight per random byte."""
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    cols = shape[-1]
    lead = shape[:-1]
    raw = rng.integers(0, 256, size=lead + (-(-cols // 8),), dtype=np.uint8)
    return _SIGNS[np.unpackbits(raw, axis=-1, count=cols)]


def jl_rows(n, eps, c_jl=JL_CONSTANT):
    return math.ceil(c_jl * eps**-2 * math.log(max(n, 2)))


def estimate_all_leverage_scores(g: Graph, eps, rng, op=None, c_jl=JL_CONSTANT) -> LeverageEstimates:
    """Sketched leverage scores for every edge.

    Projects ``W^{1/2} B`` onto ``t = ceil(c_jl eps^-2 log n)`` random sign
    vectors and solves once per vector. Estimates are capped at 1, the
    largest possible leverage score.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    op = op or build_operator(g)
    m = g.m
    t = jl_rows(g.n, eps, c_jl)
    B = g.incidence
    BTW = (B.T @ sp.diags(np.sqrt(g.w))).tocsr()
    acc = np.zeros(m)
    batch = max(1, min(t, _BATCH_ENTRIES // max(m, 1)))
    for start in range(0, t, batch):
        b = min(batch, t - start)
        Q = rademacher(rng, (m, b))
        Y = BTW @ Q
        Z = B @ op.solve_many(Y)
        acc += np.einsum("ij,ij->i", Z, Z)
    values = np.minimum(g.w * acc / t, 1.0)
    log.debug("sketched %d leverage scores with %d rows", m, t)
    return LeverageEstimates(values, "multiplicative", float(eps), np.arange(m))
