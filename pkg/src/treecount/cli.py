"""Command-line entry point: ``treecount {estimate,exact,verify,phases}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import asdict

from treecount.errors import TreeCountError
from treecount.estimator import EstimatorConfig, estimate_with_amplification, phase_schedule
from treecount.graph import read_graph
from treecount.oracle import exact_log_tree_count
from treecount.report import RunReport, count_fields, plot_phases, plot_trace, write_trace
from treecount.verify import SUITES, run_suite

EXACT_CONFIRM_VERTICES = 2000
EXACT_MAX_VERTICES = 5000


def _config(args) -> EstimatorConfig:
    return EstimatorConfig(
        epsilon=args.epsilon,
        k_constant=args.k_constant,
        keep_constant=args.keep_constant,
        rho_cap=args.rho_cap,
        base_case_edges=args.base_case,
        median_repeats=args.repeats,
        seed=args.seed,
    )


def cmd_estimate(args) -> RunReport:
    g = read_graph(args.graph)
    cfg = _config(args)
    start = time.perf_counter()
    est = estimate_with_amplification(g, cfg)
    elapsed = time.perf_counter() - start
    result = count_fields(est.value)
    result.update(
        iterations=est.iterations,
        error_budget=est.error_budget,
        variance_budget=est.variance_budget,
        repeats=len(est.runs),
        runs=est.runs,
    )
    if args.trace:
        write_trace(est.trace, args.trace)
    if args.figure:
        plot_trace(est.trace, args.figure)
    config = cfg.as_dict()
    config["median_repeats"] = cfg.repeats_for(g.m)
    return RunReport("estimate", args.graph, g.n, g.m, config, result, elapsed)


def cmd_exact(args) -> RunReport:
    g = read_graph(args.graph)
    if g.n > EXACT_MAX_VERTICES:
        raise TreeCountError(f"exact computation refused for n={g.n} > {EXACT_MAX_VERTICES}")
    if g.n > EXACT_CONFIRM_VERTICES and not args.confirm_large:
        raise TreeCountError(f"n={g.n} exceeds {EXACT_CONFIRM_VERTICES}; pass --confirm-large")
    start = time.perf_counter()
    value = exact_log_tree_count(g)
    return RunReport("exact", args.graph, g.n, g.m, {}, count_fields(value), time.perf_counter() - start)


def cmd_verify(args) -> RunReport:
    start = time.perf_counter()
    res = run_suite(args.suite, args.seed, args.trials)
    config = {"suite": args.suite, "seed": args.seed, "trials": args.trials}
    return RunReport("verify", None, None, None, config, res.as_dict(), time.perf_counter() - start)


def cmd_phases(args) -> RunReport:
    if args.graph:
        g = read_graph(args.graph)
        n, m = g.n, g.m
    elif args.edges:
        n, m = None, args.edges
    else:
        raise TreeCountError("phases needs a graph file or --edges")
    cfg = EstimatorConfig(epsilon=args.epsilon, k_constant=args.k_constant, base_case_edges=args.base_case)
    phases = phase_schedule(m, cfg)
    if args.figure:
        plot_phases(phases, args.figure)
    result = {
        "phases": [asdict(p) for p in phases],
        "predicted_budget": sum(p.budget for p in phases),
    }
    config = {"epsilon": cfg.epsilon, "k_constant": cfg.k_constant, "base_case_edges": cfg.base_case_edges}
    return RunReport("phases", args.graph, n, m, config, result, None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treecount", description="Approximate spanning tree counting.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--omit-timing", action="store_true", help="leave elapsed time out of the report")

    est = sub.add_parser("estimate", help="estimate log T(G)")
    est.add_argument("graph")
    est.add_argument("--epsilon", type=float, default=0.1)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--repeats", type=int, default=None, help="median repeats (default ceil(2 log2 m))")
    est.add_argument("--k-constant", type=float, default=1.0)
    est.add_argument("--keep-constant", type=float, default=16.0)
    est.add_argument("--rho-cap", type=float, default=0.01)
    est.add_argument("--base-case", type=int, default=300)
    est.add_argument("--trace", metavar="PATH", help="write per-iteration records as JSON lines")
    est.add_argument("--figure", metavar="PATH", help="render the iteration trace to an image")
    common(est)
    est.set_defaults(func=cmd_estimate)

    ex = sub.add_parser("exact", help="exact log T(G) via the matrix-tree theorem")
    ex.add_argument("graph")
    ex.add_argument("--confirm-large", action="store_true")
    common(ex)
    ex.set_defaults(func=cmd_exact)

    ver = sub.add_parser("verify", help="run a property suite")
    ver.add_argument("suite", choices=sorted(SUITES))
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--trials", type=int, default=None)
    common(ver)
    ver.set_defaults(func=cmd_verify)

    ph = sub.add_parser("phases", help="predicted phase schedule")
    ph.add_argument("graph", nargs="?")
    ph.add_argument("--edges", type=int)
    ph.add_argument("--epsilon", type=float, default=0.1)
    ph.add_argument("--k-constant", type=float, default=1.0)
    ph.add_argument("--base-case", type=int, default=300)
    ph.add_argument("--figure", metavar="PATH")
    common(ph)
    ph.set_defaults(func=cmd_phases)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("TREECOUNT_LOG", "WARNING").upper(), stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        report = args.func(args)
    except (TreeCountError, ValueError, OSError, KeyError) as exc:
        print(f"treecount: error: {exc}", file=sys.stderr)
        return 1
    if args.omit_timing:
        report.elapsed = None
    sys.stdout.write(report.to_json() if args.format == "json" else report.to_text())
    if report.command == "verify" and not report.result["ok"]:
        print(f"treecount: suite {args.suite} failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
