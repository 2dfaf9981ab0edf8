"""
Property suites behind ``treecount verify``.

Each suite draws a seeded corpus, checks one family of invariants case by
case and reports pass counts, the worst margin (threshold minus observed,
negative on failure) and the failing graphs serialized for reproduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from treecount.estimator import EstimatorConfig, estimate_with_amplification, iteration_estimate
from treecount.generators import random_graph_with_edges, small_corpus
from treecount.graph import eliminate_low_degree, normalize, serialize
from treecount.oracle import (
    exact_correlations,
    exact_log_tree_count,
    leverage_scores,
    log_det_after_removal,
    rho_of,
)
from treecount.solver import build_operator
from treecount.uncorrelated import (
    EdgeSubset,
    estimate_leverage_in_subset,
    get_uncorrelated,
    weighted_leverage_sum_samples,
)

# fitted envelope for sum_{e,f in S} |corr| / (|S| max(1, log n)^2) on the small corpus
LOCALIZATION_CONSTANT = 4.0


@dataclass
class SuiteResult:
    name: str
    passed: int = 0
    total: int = 0
    required: float = 1.0
    worst_margin: float = math.inf
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.total > 0 and self.passed >= math.ceil(self.required * self.total)

    def check(self, margin, graph=None, **info):
        self.total += 1
        self.worst_margin = min(self.worst_margin, float(margin))
        if margin >= 0:
            self.passed += 1
        elif len(self.failures) < 5:
            case = dict(info, margin=float(margin))
            if graph is not None:
                case["graph"] = serialize(graph)
            self.failures.append(case)

    def as_dict(self) -> dict:
        return {
            "suite": self.name,
            "passed": self.passed,
            "total": self.total,
            "required_fraction": self.required,
            "ok": self.ok,
            "worst_margin": self.worst_margin if math.isfinite(self.worst_margin) else None,
            "failures": self.failures,
        }


def elimination(seed, trials=200) -> SuiteResult:
    """Degree elimination and normalization preserve ``log T``."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("elimination")
    for g in small_corpus(trials, rng):
        exact = exact_log_tree_count(g)
        elim = eliminate_low_degree(g)
        h = elim.reduced
        err = abs(exact - elim.delta - exact_log_tree_count(h))
        err = max(err, abs(exact - exact_log_tree_count(normalize(g))))
        deg_ok = h.n <= 1 or h.degree.min() >= 3
        res.check(1e-9 - err if deg_ok else -1.0, g, error=err)
    return res


def localization(seed, trials=100) -> SuiteResult:
    """Total pairwise correlation over all edges grows like ``|S| log^2 n``."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("localization")
    for g in small_corpus(trials, rng):
        C = exact_correlations(g, np.arange(g.m)).values
        ratio = np.abs(C).sum() / (g.m * max(1.0, math.log(g.n)) ** 2)
        trace_err = abs(np.trace(C) - (g.n - 1))
        margin = LOCALIZATION_CONSTANT - ratio if trace_err <= 1e-9 else -1.0
        res.check(margin, g, ratio=ratio)
    return res


def subset(seed, trials=200, k=2) -> SuiteResult:
    """Selected subsets meet their certified correlation and the single-solve
    leverage estimates err by at most the exact correlation level."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("subset", required=0.95)
    corpus = [g for g in small_corpus(4 * trials, rng) if g.m >= 2 * k][:trials]
    for g in corpus:
        op = build_operator(g)
        f = get_uncorrelated(g, op, np.arange(g.m), k, rng)
        C = exact_correlations(g, f.ids)
        rho = rho_of(C)
        tau = estimate_leverage_in_subset(g, op, f).values
        leverage_err = np.abs(tau - np.diag(C.values)).max() - rho
        margin = min(f.rho_bound - rho, 1e-6 - leverage_err)
        res.check(margin, g, rho_exact=rho, rho_bound=f.rho_bound, attempts=f.attempts)
    return res


def estimators(seed, trials=40, draws=2000) -> SuiteResult:
    """The random-sign estimator is unbiased within 3 standard errors and
    the per-iteration estimate tracks the exact log-count difference."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("estimators", required=0.95)
    done = 0
    for g in small_corpus(10 * trials, rng):
        if done == trials:
            break
        tau_all = leverage_scores(g)
        low = np.flatnonzero(tau_all <= 0.88)
        if low.size < 2:
            continue
        ids = rng.choice(low, size=2, replace=False)
        C = exact_correlations(g, ids).values
        rho = rho_of(C)
        f = EdgeSubset(ids, rho, low.size)
        op = build_operator(g)
        theta = rng.uniform(0, 1, size=2)
        samples = weighted_leverage_sum_samples(g, op, f, theta, rng, draws)
        truth = float(theta @ np.diag(C))
        var = 2 * sum(theta[i] * theta[j] * C[i, j] ** 2 for i in range(2) for j in range(2) if i != j)
        band = 3 * math.sqrt(var / draws) + 1e-9
        unbiased = band - abs(samples.mean() - truth)

        tau = estimate_leverage_in_subset(g, op, f)
        diff = log_det_after_removal(g, ids)
        # the iteration check needs a convergent Taylor expansion: rho well below 0.1
        if rho > 0.05 or np.any(tau.values >= 0.9) or not np.isfinite(diff):
            res.check(unbiased, g, kind="unbiased")
            done += 1
            continue
        xs = [iteration_estimate(g, op, f, tau, rng) for _ in range(200)]
        close = 200 * 2 * rho**2 + 4 * np.std(xs) / math.sqrt(len(xs)) + 1e-9 - abs(np.mean(xs) - diff)
        res.check(min(unbiased, close), g, kind="unbiased+iteration")
        done += 1
    return res


def end2end(seed, trials=100, n=50, m=150, epsilon=0.2, repeats=1) -> SuiteResult:
    """Single estimates land within ``epsilon`` of ``log T`` in at least 90% of trials."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("end2end", required=0.9)
    for i in range(trials):
        g = random_graph_with_edges(n, m, rng)
        cfg = EstimatorConfig(epsilon=epsilon, median_repeats=repeats, seed=seed * 100003 + i)
        est = estimate_with_amplification(g, cfg)
        err = abs(est.value - exact_log_tree_count(g))
        res.check(epsilon - err, g, error=err, seed=cfg.seed)
    return res


SUITES = {
    "elimination": elimination,
    "localization": localization,
    "subset": subset,
    "estimators": estimators,
    "end2end": end2end,
}


def run_suite(name, seed, trials=None) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    fn = SUITES[name]
    return fn(seed) if trials is None else fn(seed, trials)
