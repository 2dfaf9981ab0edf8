import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treecount.sketch import build_sketch, recover, sketch_rows


def test_row_count_formula():
    # ceil(8 * 100 * ln 100) = 3685, already odd
    assert sketch_rows(0.01, 0.1) == 3685
    assert build_sketch(1, 0.01, 0.1, np.random.default_rng(0)).t == 3685


def test_even_row_count_rounded_up():
    t = math.ceil(8 * 0.6**-2 * math.log(1 / 0.5))
    assert t % 2 == 0
    assert sketch_rows(0.5, 0.6) == t + 1


def test_bad_parameters():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        build_sketch(0, 0.1, 0.1, rng)
    with pytest.raises(ValueError):
        build_sketch(3, 1.0, 0.1, rng)
    with pytest.raises(ValueError):
        build_sketch(3, 0.1, 0.0, rng)


def test_same_seed_same_matrix():
    a = build_sketch(5, 0.01, 0.1, np.random.default_rng(7))
    b = build_sketch(5, 0.01, 0.1, np.random.default_rng(7))
    assert np.array_equal(a.entries, b.entries)
    assert (a.t, a.d) == (b.t, b.d)


def test_entries_median_abs_is_one():
    sk = build_sketch(50, 0.01, 0.1, np.random.default_rng(1))
    assert np.median(np.abs(sk.entries)) == pytest.approx(1.0, abs=0.01)
    assert np.isfinite(sk.entries).all()


def test_zero_vector():
    sk = build_sketch(4, 0.01, 0.1, np.random.default_rng(0))
    assert recover(sk.apply(np.zeros(4)), sk) == 0.0


def _failure_rate(v, seeds=1000, delta=0.01, eps=0.1):
    v = np.asarray(v, dtype=float)
    target = np.abs(v).sum()
    bad = 0
    for s in range(seeds):
        sk = build_sketch(v.size, delta, eps, np.random.default_rng(s))
        r = recover(sk.apply(v), sk)
        bad += not ((1 - eps) * target <= r <= (1 + eps) * target)
    return bad / seeds


def test_basis_vector_rate():
    assert _failure_rate([0.0, 1.0, 0.0]) <= 0.01


def test_three_four_rate():
    assert _failure_rate([3.0, 4.0]) <= 0.01


def test_random_dense_rate():
    v = np.random.default_rng(99).normal(size=100)
    assert _failure_rate(v, seeds=300) <= 0.02


def test_column_wise_recovery():
    sk = build_sketch(3, 0.01, 0.1, np.random.default_rng(2))
    V = np.array([[1.0, 0.0], [2.0, -5.0], [0.0, 1.0]])
    r = recover(sk.entries @ V, sk)
    assert r.shape == (2,)
    assert np.allclose(r, [3.0, 6.0], rtol=0.1)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=8),
    st.floats(-1e3, 1e3),
    st.integers(0, 2**32 - 1),
)
def test_scale_equivariance(v, alpha, seed):
    sk = build_sketch(len(v), 0.1, 0.3, np.random.default_rng(seed))
    y = sk.apply(v)
    assert recover(alpha * y, sk) == pytest.approx(abs(alpha) * recover(y, sk), rel=1e-12, abs=1e-300)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sign_flip_invariance(seed):
    rng = np.random.default_rng(seed)
    y = rng.standard_cauchy(101)
    signs = rng.choice([-1.0, 1.0], size=101)
    assert recover(y * signs) == recover(y)
