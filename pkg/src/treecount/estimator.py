"""
The recursive spanning-tree estimator.

Each iteration removes low-degree vertices exactly, picks an uncorrelated
set ``F`` of low-leverage edges, estimates ``log T(G - F) - log T(G)`` and
continues on ``G - F``. The recursion runs as a loop and bottoms out in the
exact determinant once the graph is small.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from treecount.errors import DisconnectedGraphError
from treecount.graph import (
    MAX_WEIGHT,
    MIN_WEIGHT,
    Graph,
    eliminate_low_degree,
    remove_edges,
    validate_connected,
)
from treecount.oracle import exact_log_tree_count
from treecount.sketch import SKETCH_CONSTANT
from treecount.solver import DEFAULT_TOL, JL_CONSTANT, build_operator, estimate_all_leverage_scores
from treecount.uncorrelated import (
    KEEP_CONSTANT,
    MASK_CONSTANT,
    MAX_RETRIES,
    certified_rho,
    estimate_leverage_in_subset,
    estimate_weighted_leverage_sum,
    get_uncorrelated,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EstimatorConfig:
    """Constants of the estimator. Defaults follow the reference algorithm
    where it fixes a value and are calibration choices elsewhere."""

    epsilon: float = 0.1
    k_constant: float = 1.0
    theta_constant: float = 0.1
    leverage_keep_threshold: float = 0.8
    leverage_sketch_eps: float = 0.1
    base_case_edges: int = 300
    rho_cap: float = 0.01
    median_repeats: int | None = None
    seed: int = 0
    keep_constant: float = KEEP_CONSTANT
    mask_constant: float = MASK_CONSTANT
    sketch_constant: float = SKETCH_CONSTANT
    jl_constant: float = JL_CONSTANT
    solver_tol: float = DEFAULT_TOL
    max_retries: int = MAX_RETRIES
    budget_constant: float = 200.0

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.theta_constant <= 0.1:
            raise ValueError("theta_constant must lie in (0, 0.1]")
        if self.base_case_edges < 1:
            raise ValueError("base_case_edges must be positive")
        if self.median_repeats is not None and self.median_repeats < 1:
            raise ValueError("median_repeats must be positive")
        for name in ("k_constant", "keep_constant", "mask_constant", "sketch_constant", "jl_constant", "rho_cap"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def repeats_for(self, m: int) -> int:
        if self.median_repeats is not None:
            return self.median_repeats
        return max(1, math.ceil(2 * math.log2(max(m, 2))))

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class LogEstimate:
    """Estimate of ``log T`` with the bias and variance budgets accumulated
    along the way and one trace record per iteration."""

    value: float = 0.0
    error_budget: float = 0.0
    variance_budget: float = 0.0
    trace: list = field(default_factory=list)
    runs: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.trace)


@dataclass(frozen=True)
class Phase:
    index: int
    edges: float
    k: int
    budget: float


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for the ``index``-th independent stream under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def target_k(m, cfg: EstimatorConfig) -> int:
    return math.ceil(cfg.k_constant * cfg.epsilon * math.sqrt(m) / math.log(m) ** 3)


def choose_k(m, n, s_size, cfg: EstimatorConfig) -> int:
    """Subset size for this iteration, clamped so the certified correlation
    stays under ``rho_cap`` and ``k <= |S|/2``; never below 1."""
    k_rho = math.floor(cfg.rho_cap * s_size / (cfg.keep_constant * math.log(n) ** 2))
    return max(1, min(target_k(m, cfg), s_size // 2, k_rho))


def _iteration_terms(g, op, f, tau, rng, theta_constant):
    t = np.asarray(tau.values, dtype=float)
    if np.any(t >= 0.9):
        raise ValueError("leverage estimate of at least 0.9 in the removed set")
    theta = theta_constant / (1 - t)
    est = estimate_weighted_leverage_sum(g, op, f, theta, rng)
    phi = est.value / theta_constant
    x = -phi + float(np.sum(np.log1p(-t) + t / (1 - t)))
    return x, phi


def iteration_estimate(g, op, f, tau, rng, theta_constant=0.1) -> float:
    """Estimate of ``log T(G - F) - log T(G)``.

    With ``theta_f = C / (1 - tau_f)`` and ``phi`` the random-sign estimate
    of ``sum theta_f tau_f`` divided by ``C``, returns
    ``-phi + sum(log(1 - tau_f) + tau_f / (1 - tau_f))``.
    """
    return _iteration_terms(g, op, f, tau, rng, theta_constant)[0]


def _check_input(g: Graph):
    if not validate_connected(g):
        raise DisconnectedGraphError()
    if g.m and (g.w.min() < MIN_WEIGHT or g.w.max() > MAX_WEIGHT):
        raise ValueError(f"edge weights must lie in [{MIN_WEIGHT:g}, {MAX_WEIGHT:g}]")


def approx_spanning_tree(g: Graph, cfg: EstimatorConfig, rng=None, on_iteration=None) -> LogEstimate:
    """Estimate ``log T(g)`` within ``O(epsilon)`` with constant probability.

    Parameters
    ----------
    g : Graph
        Connected graph with weights in the supported range.
    cfg : EstimatorConfig
    rng : numpy.random.Generator, optional
        Defaults to stream 0 of ``cfg.seed``.
    on_iteration : callable, optional
        Called with each trace record as it is produced.
    """
    _check_input(g)
    rng = stream(cfg.seed) if rng is None else rng
    out = LogEstimate()
    current = g
    while True:
        elim = eliminate_low_degree(current)
        out.value += elim.delta
        G = elim.reduced
        if G.m <= cfg.base_case_edges:
            out.value += exact_log_tree_count(G)
            break
        op = build_operator(G, cfg.solver_tol)
        lev = estimate_all_leverage_scores(G, cfg.leverage_sketch_eps, rng, op=op, c_jl=cfg.jl_constant)
        S = np.flatnonzero(lev.values <= cfg.leverage_keep_threshold)
        if S.size < G.m / 21:
            raise RuntimeError(
                f"only {S.size} of {G.m} edges have low leverage; expected at least m/21"
            )
        if S.size < 2:
            out.value += exact_log_tree_count(G)
            break
        k = choose_k(G.m, G.n, S.size, cfg)
        f = get_uncorrelated(
            G, op, S, k, rng,
            keep_constant=cfg.keep_constant,
            mask_constant=cfg.mask_constant,
            sketch_constant=cfg.sketch_constant,
            max_retries=cfg.max_retries,
        )
        tau = estimate_leverage_in_subset(G, op, f)
        x, phi = _iteration_terms(G, op, f, tau, rng, cfg.theta_constant)
        out.value -= x
        step = cfg.budget_constant * len(f) * f.rho_bound**2
        out.error_budget += step
        out.variance_budget += step
        record = {
            "iteration": len(out.trace),
            "m": G.m,
            "n": G.n,
            "s_size": int(S.size),
            "k": len(f),
            "rho": f.rho_bound,
            "x": x,
            "phi": phi,
            "delta": elim.delta,
            "attempts": f.attempts,
            "error_budget": out.error_budget,
            "variance_budget": out.variance_budget,
        }
        out.trace.append(record)
        if on_iteration is not None:
            on_iteration(record)
        current = remove_edges(G, f)
        if not validate_connected(current):
            raise DisconnectedGraphError("removing the selected edges disconnected the graph")
    out.runs = [out.value]
    return out


def estimate_with_amplification(g: Graph, cfg: EstimatorConfig, on_iteration=None) -> LogEstimate:
    """Median of ``cfg.repeats_for(m)`` independent runs.

    Run ``i`` uses stream ``i`` of ``cfg.seed``; the returned estimate is the
    run holding the (lower) median value, with every run's value in ``runs``.
    """
    _check_input(g)
    repeats = cfg.repeats_for(g.m)
    results = [approx_spanning_tree(g, cfg, stream(cfg.seed, i), on_iteration) for i in range(repeats)]
    values = [r.value for r in results]
    pick = int(np.argsort(values, kind="stable")[(repeats - 1) // 2])
    best = results[pick]
    best.runs = values
    return best


def phase_schedule(m0: int, cfg: EstimatorConfig) -> list[Phase]:
    """Phases ``m_i = m0 / 2^i`` above the base case, with their subset size
    ``k_i`` and predicted budget ``k_i^2 / m_i * (log m_i)^4``."""
    if m0 < 1:
        raise ValueError("m0 must be positive")
    phases = []
    i = 0
    while (mi := m0 / 2**i) > cfg.base_case_edges:
        ki = target_k(mi, cfg)
        phases.append(Phase(i, mi, ki, ki**2 / mi * math.log(mi) ** 4))
        i += 1
    return phases


class Deadline:
    """Trace callback that aborts a run once ``seconds`` have elapsed."""

    def __init__(self, seconds):
        self.seconds = seconds
        self.start = time.perf_counter()
        self.iterations = 0

    def __call__(self, record):
        self.iterations += 1
        if time.perf_counter() - self.start > self.seconds:
            raise TimeoutError(
                f"deadline of {self.seconds:.0f}s passed after {self.iterations} iterations "
                f"(graph at m={record['m']})"
            )
