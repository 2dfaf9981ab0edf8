"""
Finding edge subsets with small pairwise electrical correlation, and
estimating leverage scores inside them.

Correlation between edges ``e`` and ``f`` is
``sqrt(w_e) b_e^T L^+ b_f sqrt(w_f)``; a subset is rho-correlated when every
edge's summed absolute correlation against the others is at most rho.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from treecount.errors import SelectionError
from treecount.graph import Graph
from treecount.sketch import SKETCH_CONSTANT, build_sketch, recover
from treecount.solver import LaplacianOperator, LeverageEstimates, rademacher

log = logging.getLogger(__name__)

KEEP_CONSTANT = 16.0
MASK_CONSTANT = 3.0
MAX_RETRIES = 20
_SKETCH_EPS = 0.1
_BATCH_ENTRIES = 1 << 22


@dataclass(frozen=True)
class EdgeSubset:
    """Edge ids together with the correlation level they are certified at.

    ``recovered`` holds the sketched correlation estimate of each chosen
    edge and ``attempts`` the number of candidate draws it took; both are
    diagnostics only.
    """

    ids: np.ndarray
    rho_bound: float
    source_size: int
    attempts: int = 1
    recovered: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.ids)


@dataclass(frozen=True)
class WeightedSumEstimate:
    value: float
    theta: np.ndarray
    variance_bound: float


def certified_rho(k, n, s_size, keep_constant=KEEP_CONSTANT) -> float:
    """Correlation level certified for a selected subset of size ``k``.

    Singletons have no cross terms and are exactly 0-correlated.
    """
    if k <= 1:
        return 0.0
    return keep_constant * k * math.log(n) ** 2 / s_size


def _signed_columns(g: Graph, ids, coeff):
    """Sparse ``n x |ids|`` matrix whose column j is ``coeff[j] * b(ids[j])``."""
    ids = np.asarray(ids)
    j = np.arange(ids.size)
    rows = np.concatenate([g.u[ids], g.v[ids]])
    cols = np.concatenate([j, j])
    vals = np.concatenate([coeff, -coeff])
    return sp.csc_matrix((vals, (rows, cols)), shape=(g.n, ids.size))


def sketched_mask_average(g, op, fplus, masks, sketch, route="auto"):
    """``C @ Mtilde`` where ``Mtilde`` averages ``4 diag(h) M diag(1-h)`` over masks.

    ``M`` is the correlation matrix of ``fplus``. The ``"direct"`` route solves
    once per edge of ``fplus`` and forms ``M``; the ``"sketch"`` route solves
    once per sketch row per mask against ``(C diag(h) W^{1/2} B_F)^T``. Both
    give the same matrix; ``"auto"`` picks whichever needs fewer solves.
    """
    fplus = np.asarray(fplus)
    H = np.asarray(masks, dtype=float)
    ell, d = H.shape
    C = sketch.entries
    sw = np.sqrt(g.w[fplus])
    BF = _signed_columns(g, fplus, np.ones(d))
    if route == "auto":
        route = "direct" if d <= ell * sketch.t else "sketch"
    out = np.zeros((C.shape[0], d))
    if route == "direct":
        X = op.solve_many((BF @ sp.diags(sw)).toarray())
        M = sw[:, None] * (BF.T @ X)
        M = (M + M.T) / 2
        for h in H:
            out += (C * h) @ M * (1 - h)
    elif route == "sketch":
        for h in H:
            rhs = BF @ ((h * sw)[:, None] * C.T)
            X = op.solve_many(rhs)
            out += (((1 - h) * sw)[:, None] * (BF.T @ X)).T
    else:
        raise ValueError(f"unknown route {route!r}")
    return 4.0 * out / ell


def get_uncorrelated(
    g: Graph,
    op: LaplacianOperator,
    s,
    k,
    rng,
    keep_constant=KEEP_CONSTANT,
    mask_constant=MASK_CONSTANT,
    sketch_constant=SKETCH_CONSTANT,
    max_retries=MAX_RETRIES,
    route="auto",
) -> EdgeSubset:
    """Select ``k`` edges of ``s`` whose mutual correlation is certified small.

    Draws a uniform candidate set of ``2k`` edges, estimates each candidate's
    total correlation against the other candidates with masked Cauchy
    sketches, keeps candidates at or below the certified level and returns
    the ``k`` with the lowest estimates. A fresh candidate set is drawn when
    fewer than ``k`` survive.

    Raises
    ------
    ValueError
        If ``k`` exceeds ``|s| / 2``.
    SelectionError
        If ``max_retries`` candidate draws all fail.
    """
    s = np.asarray(s, dtype=np.int64)
    if k < 1 or 2 * k > s.size:
        raise ValueError(f"need 1 <= k <= |S|/2, got k={k}, |S|={s.size}")
    if k == 1:
        pick = s[rng.integers(s.size)]
        return EdgeSubset(np.array([pick]), 0.0, int(s.size), 1, np.zeros(1))

    n = g.n
    rho = certified_rho(k, n, s.size, keep_constant)
    ell = math.ceil(mask_constant * math.log(n))
    delta = float(n) ** -3
    for attempt in range(1, max_retries + 1):
        fplus = rng.choice(s, size=2 * k, replace=False)
        masks = rng.integers(0, 2, size=(ell, 2 * k))
        sketch = build_sketch(2 * k, delta, _SKETCH_EPS, rng, sketch_constant)
        rec = recover(sketched_mask_average(g, op, fplus, masks, sketch, route), sketch)
        ok = np.flatnonzero(rec <= rho)
        log.debug(
            "candidate draw %d: %d of %d under %.4g (median recovered %.4g)",
            attempt, ok.size, 2 * k, rho, float(np.median(rec)),
        )
        if ok.size >= k:
            chosen = ok[np.argsort(rec[ok], kind="stable")[:k]]
            return EdgeSubset(fplus[chosen], rho, int(s.size), attempt, rec[chosen])
    raise SelectionError(
        f"no {rho:.3g}-correlated subset of size {k} after {max_retries} draws"
    )


def estimate_leverage_in_subset(g: Graph, op: LaplacianOperator, f: EdgeSubset) -> LeverageEstimates:
    """Leverage scores of all edges in ``f`` from one aggregated solve.

    Each estimate is off by at most the edge's summed correlation with the
    rest of ``f``.
    """
    ids = np.asarray(f.ids)
    sw = np.sqrt(g.w[ids])
    rhs = np.zeros(g.n)
    np.add.at(rhs, g.u[ids], sw)
    np.add.at(rhs, g.v[ids], -sw)
    x = op.solve(rhs)
    tau = sw * (x[g.u[ids]] - x[g.v[ids]])
    return LeverageEstimates(tau, "additive", float(f.rho_bound), ids)


def _check_theta(f, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (len(f.ids),):
        raise ValueError("theta needs one coefficient per subset edge")
    if np.any(theta < 0) or np.any(theta > 1) or not np.all(np.isfinite(theta)):
        raise ValueError("theta entries must lie in [0, 1]")
    return theta


def weighted_leverage_sum_samples(g, op, f, theta, rng, size) -> np.ndarray:
    """``size`` independent draws of the random-sign estimator of ``sum theta_f tau_f``."""
    theta = _check_theta(f, theta)
    ids = np.asarray(f.ids)
    BF = _signed_columns(g, ids, np.sqrt(g.w[ids] * theta))
    out = np.empty(size)
    batch = max(1, _BATCH_ENTRIES // max(g.n, 1))
    for start in range(0, size, batch):
        b = min(batch, size - start)
        R = rademacher(rng, (ids.size, b))
        V = BF @ R
        X = op.solve_many(V)
        out[start:start + b] = np.einsum("ij,ij->j", V, X)
    return out


def estimate_weighted_leverage_sum(g, op, f, theta, rng) -> WeightedSumEstimate:
    """Unbiased estimate of ``sum_f theta_f tau_f`` with variance at most ``2 rho^2 |F|``."""
    theta = _check_theta(f, theta)
    value = float(weighted_leverage_sum_samples(g, op, f, theta, rng, 1)[0])
    return WeightedSumEstimate(value, theta, 2 * f.rho_bound**2 * len(f.ids))
