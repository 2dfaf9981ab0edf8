import numpy as np
import pytest

from treecount.generators import complete, cycle, path, small_corpus


@pytest.fixture
def triangle():
    return complete(3)


@pytest.fixture
def k4():
    return complete(4)


@pytest.fixture
def c5():
    return cycle(5)


@pytest.fixture
def path3():
    return path([2.0, 3.0])


@pytest.fixture(scope="session")
def corpus():
    """200 random connected graphs, n <= 9, weights in {0.5, 1, 2}."""
    return small_corpus(200, np.random.default_rng(20261018))
