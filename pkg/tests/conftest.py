import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from csbm import kernels
from csbm.graph import Graph

settings.register_profile("csbm", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("csbm")


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.available_backends()[request.param]


def random_graph(n, p, rng):
    upper = np.triu(rng.random((n, n)) < p, 1)
    return Graph.from_dense(upper | upper.T)


def path_graph(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def asymmetric_graph(n, rng, p=0.5, tries=500):
    """A random graph whose only automorphism is the identity (checked exhaustively)."""
    from csbm.matching import exhaustive_search

    for _ in range(tries):
        g = random_graph(n, p, rng)
        if exhaustive_search(g, g).n_maximizers == 1:
            return g
    raise RuntimeError("no asymmetric graph found")
