import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treecount.errors import DisconnectedGraphError, GraphFormatError
from treecount.generators import complete, random_connected_graph
from treecount.graph import (
    Graph,
    eliminate_low_degree,
    load_graph,
    normalize,
    remove_edges,
    serialize,
    validate_connected,
)
from treecount.oracle import brute_force_tree_weight, exact_log_tree_count


def test_load_triangle():
    g = load_graph("0 1 1\n1 2 1\n2 0 1")
    assert (g.n, g.m) == (3, 3)
    assert g.u.tolist() == [0, 1, 2] and g.v.tolist() == [1, 2, 0]


def test_load_path_weights():
    g = load_graph("0 1 2\n1 2 3")
    assert g.n == 3
    assert g.w.tolist() == [2.0, 3.0]


def test_load_relabels_sparse_ids():
    g = load_graph("# comment\n10 30 1\n30 20 2\n")
    assert g.n == 3
    assert list(g.edges()) == [(0, 2, 1.0), (2, 1, 2.0)]


@pytest.mark.parametrize(
    "text, line",
    [
        ("0 1 1\n0 1 -1", 2),
        ("0 1 0", 1),
        ("0 1", 1),
        ("0 x 1", 1),
        ("0 1 abc", 1),
        ("0 1 1e12", 1),
        ("p 3 2\n0 1 1\n1 5 1", 3),
    ],
)
def test_load_errors_name_the_line(text, line):
    with pytest.raises(GraphFormatError) as info:
        load_graph(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_header_edge_count_mismatch():
    with pytest.raises(GraphFormatError, match="declares 3 edges"):
        load_graph("p 3 3\n0 1 1\n1 2 1\n")


def test_header_keeps_isolated_vertices():
    g = load_graph("p 4 1\n0 1 1\n")
    assert g.n == 4
    assert not validate_connected(g)


def test_validate_connected(triangle):
    assert validate_connected(triangle)
    assert not validate_connected(Graph.from_edges(4, [(0, 1), (2, 3)]))
    assert validate_connected(Graph(1, [], [], []))


def test_normalize_merges_parallel_edges():
    g = normalize(Graph.from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)]))
    assert g.m == 1 and g.w.tolist() == [2.0]


def test_normalize_drops_self_loops(triangle):
    g = Graph.from_edges(3, list(triangle.edges()) + [(1, 1, 4.0)])
    h = normalize(g)
    assert h == triangle
    assert exact_log_tree_count(h) == pytest.approx(math.log(3))


def test_normalize_identity_on_simple(k4):
    assert normalize(k4) is k4


def test_eliminate_path(path3):
    res = eliminate_low_degree(path3)
    assert res.reduced.n == 1 and res.reduced.m == 0
    assert res.delta == pytest.approx(math.log(6))


def test_eliminate_triangle(triangle):
    # brute force: the unit triangle has 3 spanning trees
    assert brute_force_tree_weight(triangle) == 3
    res = eliminate_low_degree(triangle)
    assert res.reduced.n <= 1
    assert res.delta == pytest.approx(math.log(3), abs=1e-12)


def test_eliminate_noop_on_k4(k4):
    res = eliminate_low_degree(k4)
    assert res.delta == 0.0
    assert res.reduced == k4


def test_eliminate_rejects_disconnected():
    with pytest.raises(DisconnectedGraphError):
        eliminate_low_degree(Graph.from_edges(4, [(0, 1), (2, 3)]))


def test_eliminate_preserves_log_count(corpus):
    for g in corpus:
        res = eliminate_low_degree(g)
        h = res.reduced
        assert h.n <= 1 or h.degree.min() >= 3
        assert exact_log_tree_count(g) == pytest.approx(res.delta + exact_log_tree_count(h), abs=1e-9)


def test_normalize_preserves_log_count(corpus):
    for g in corpus:
        doubled = Graph(g.n, np.concatenate([g.u, g.v]), np.concatenate([g.v, g.u]), np.concatenate([g.w, g.w]) / 2)
        assert exact_log_tree_count(normalize(doubled)) == pytest.approx(exact_log_tree_count(g), abs=1e-9)


def test_remove_edges(triangle):
    h = remove_edges(triangle, [0])
    assert h.m == 2 and h.n == 3
    assert remove_edges(triangle, []) == triangle
    tree = Graph.from_edges(3, [(0, 1), (1, 2)])
    assert not validate_connected(remove_edges(tree, [0, 1]))
    with pytest.raises(KeyError):
        remove_edges(triangle, [3])


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(1, 12),
    extra=st.integers(0, 20),
    seed=st.integers(0, 2**32 - 1),
)
def test_serialize_roundtrip(n, extra, seed):
    g = random_connected_graph(n, extra, np.random.default_rng(seed), weights=(0.3, 1.0, 7.25))
    assert load_graph(serialize(g)) == g


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 9), extra=st.integers(0, 15), seed=st.integers(0, 2**32 - 1))
def test_elimination_against_enumeration(n, extra, seed):
    g = random_connected_graph(n, extra, np.random.default_rng(seed), weights=(0.5, 1.0, 2.0))
    res = eliminate_low_degree(g)
    reduced = brute_force_tree_weight(res.reduced) if res.reduced.n > 1 else 1.0
    assert math.log(brute_force_tree_weight(g)) == pytest.approx(res.delta + math.log(reduced), abs=1e-9)


def test_graph_rejects_bad_weights():
    with pytest.raises(ValueError):
        Graph.from_edges(2, [(0, 1, 0.0)])
    with pytest.raises(ValueError):
        Graph.from_edges(2, [(0, 2, 1.0)])


def test_incidence_and_laplacian(triangle):
    L = triangle.laplacian.toarray()
    assert np.allclose(L, 3 * np.eye(3) - np.ones((3, 3)))
    assert np.allclose(triangle.dense_laplacian(), L)
    assert complete(5).degree.tolist() == [4] * 5
