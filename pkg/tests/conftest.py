import numpy as np
import pytest
from hypothesis import settings

from graphhjb import Boundary
from graphhjb.generators import chain_graph, walk_kernel

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def chain3():
    return chain_graph(3)


@pytest.fixture
def walk3():
    return walk_kernel(3)


@pytest.fixture
def ends3():
    return Boundary((0, 2), 3)


def brute_force_distance(w, boundary, q=1.0):
    """Bellman-Ford style oracle: relax ``d(x) <- w(y, x)^-q + d(y)`` n times."""
    n = w.shape[0]
    cost = np.full((n, n), np.inf)
    pos = w > 0
    cost[pos] = w[pos] ** (-q)
    d = np.full(n, np.inf)
    d[list(boundary)] = 0.0
    for _ in range(n):
        cand = np.min(d[:, None] + cost, axis=0)
        d = np.minimum(d, cand)
    return d


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
