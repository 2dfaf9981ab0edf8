"""Approximate spanning tree counting by repeatedly deleting uncorrelated edge subsets."""

from treecount.estimator import (
    EstimatorConfig,
    LogEstimate,
    approx_spanning_tree,
    estimate_with_amplification,
    phase_schedule,
)
from treecount.graph import Graph, eliminate_low_degree, load_graph, normalize, read_graph, remove_edges, serialize
from treecount.oracle import brute_force_tree_weight, exact_log_tree_count

__all__ = [
    "EstimatorConfig",
    "Graph",
    "LogEstimate",
    "approx_spanning_tree",
    "brute_force_tree_weight",
    "eliminate_low_degree",
    "estimate_with_amplification",
    "exact_log_tree_count",
    "load_graph",
    "normalize",
    "phase_schedule",
    "read_graph",
    "remove_edges",
    "serialize",
]
