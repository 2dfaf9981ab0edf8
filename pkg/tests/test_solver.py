import numpy as np
import pytest

from treecount.errors import DisconnectedGraphError, SolverError
from treecount.generators import complete, path, random_connected_graph, random_graph_with_edges
from treecount.graph import Graph
from treecount.oracle import dense_pseudoinverse, leverage_scores
from treecount.solver import (
    LaplacianOperator,
    build_operator,
    estimate_all_leverage_scores,
    jl_rows,
    rademacher,
    solve,
)


def kinds(g):
    return [build_operator(g), LaplacianOperator(g, dense_max=0)]


def test_triangle_residual(triangle):
    rng = np.random.default_rng(0)
    for op in kinds(triangle):
        b = rng.normal(size=3)
        b -= b.mean()
        x = solve(op, b)
        assert np.linalg.norm(triangle.laplacian @ x - b) <= 1e-10 * np.linalg.norm(b)
        assert abs(x.sum()) < 1e-12


def test_single_edge_resistance():
    g = Graph.from_edges(2, [(0, 1, 4.0)])
    for op in kinds(g):
        x = op.solve(np.array([1.0, -1.0]))
        assert x[0] - x[1] == pytest.approx(0.25)


def test_unprojected_rhs_is_projected(k4):
    b = np.array([1.0, 2.0, 3.0, 4.0])
    for op in kinds(k4):
        x = op.solve(b)
        assert np.allclose(k4.laplacian @ x, b - b.mean(), atol=1e-9)


def test_zero_rhs(triangle):
    for op in kinds(triangle):
        assert np.array_equal(op.solve(np.zeros(3)), np.zeros(3))


def test_triangle_edge_quadratic_form(triangle):
    b = triangle.incidence[0].toarray()[0]
    for op in kinds(triangle):
        assert b @ op.solve(b) == pytest.approx(2 / 3, abs=1e-10)


def test_series_resistance():
    g = path([1.0, 1.0])
    for op in kinds(g):
        x = op.solve(np.array([1.0, 0.0, -1.0]))
        assert x[0] - x[2] == pytest.approx(2.0)


def test_accuracy_against_dense():
    rng = np.random.default_rng(4)
    for _ in range(8):
        n = int(rng.integers(2, 201))
        g = random_connected_graph(n, int(rng.integers(0, 3 * n)), rng, (0.5, 1.0, 2.0))
        Lp = dense_pseudoinverse(g)
        B = rng.normal(size=(n, 5))
        want = Lp @ B
        for op in kinds(g):
            got = op.solve_many(B)
            err = np.linalg.norm(got - want, axis=0) / np.linalg.norm(want, axis=0)
            assert err.max() <= 1e-6


def test_uncertified_factorization_refines():
    rng = np.random.default_rng(2)
    g = random_connected_graph(40, 60, rng, weights=(1e-6, 1.0, 1e6))
    op = build_operator(g)
    b = rng.normal(size=40)
    b -= b.mean()
    x = op.solve(b)
    assert np.linalg.norm(g.laplacian @ x - b) <= 10 * op.tol * np.linalg.norm(b)


def test_iteration_cap_raises():
    g = random_graph_with_edges(300, 900, np.random.default_rng(1))
    op = LaplacianOperator(g, dense_max=0, max_iter=2)
    with pytest.raises(SolverError) as info:
        op.solve(np.r_[1.0, np.zeros(298), -1.0])
    assert info.value.residual > op.tol


def test_disconnected_operator():
    with pytest.raises(DisconnectedGraphError):
        build_operator(Graph.from_edges(4, [(0, 1), (2, 3)]))


def test_rademacher_entries():
    Q = rademacher(np.random.default_rng(0), (50, 37))
    assert Q.shape == (50, 37)
    assert set(np.unique(Q)) == {-1.0, 1.0}
    assert abs(Q.mean()) < 0.05


def test_jl_rows():
    assert jl_rows(3, 0.1) == int(np.ceil(400 * np.log(3)))


def test_tree_leverage_is_one():
    rng = np.random.default_rng(8)
    tree = random_connected_graph(30, 0, rng, (0.5, 2.0))
    lev = estimate_all_leverage_scores(tree, 0.1, rng)
    assert lev.regime == "multiplicative"
    assert np.all((lev.values >= 0.9) & (lev.values <= 1.1))


def test_triangle_bracket_rate(triangle):
    # per-edge sketch spread is about 0.032 at t = 440, so some edge leaves
    # the bracket [0.6, 0.74] in roughly a tenth of seeds
    op = build_operator(triangle)
    hits = 0
    for s in range(300):
        v = estimate_all_leverage_scores(triangle, 0.1, np.random.default_rng(s), op=op).values
        hits += bool(np.all((v >= 0.6) & (v <= 0.74)))
    assert hits / 300 >= 0.85


def test_multiplicative_rate():
    rng = np.random.default_rng(5)
    total = bad = 0
    for _ in range(12):
        n = int(rng.integers(10, 61))
        g = random_connected_graph(n, int(rng.integers(0, 2 * n)), rng, (0.5, 1.0, 2.0))
        tau = leverage_scores(g)
        op = build_operator(g)
        for s in range(50):
            est = estimate_all_leverage_scores(g, 0.1, np.random.default_rng(s), op=op).values
            ok = (0.9 * est <= tau + 1e-12) & (tau <= 1.1 * est + 1e-12)
            total += ok.size
            bad += int((~ok).sum())
    assert bad / total <= 0.01


def test_trace_identity_under_sketch():
    rng = np.random.default_rng(6)
    g = random_graph_with_edges(80, 300, rng)
    est = estimate_all_leverage_scores(g, 0.1, rng).values
    assert 0.9 * (g.n - 1) <= est.sum() <= 1.1 * (g.n - 1)


def test_sketch_determinism(k4):
    a = estimate_all_leverage_scores(k4, 0.2, np.random.default_rng(3)).values
    b = estimate_all_leverage_scores(k4, 0.2, np.random.default_rng(3)).values
    assert a.tobytes() == b.tobytes()


def test_batched_sketch_matches_unbatched(monkeypatch):
    import treecount.solver as solver

    g = random_graph_with_edges(40, 120, np.random.default_rng(1))
    whole = estimate_all_leverage_scores(g, 0.3, np.random.default_rng(9)).values
    monkeypatch.setattr(solver, "_BATCH_ENTRIES", g.m * 7)
    parts = estimate_all_leverage_scores(g, 0.3, np.random.default_rng(9)).values
    # batching changes the draw order, not the estimator's accuracy
    tau = leverage_scores(g)
    for est in (whole, parts):
        assert np.mean(np.abs(est - tau) <= 0.3 * tau) >= 0.95
