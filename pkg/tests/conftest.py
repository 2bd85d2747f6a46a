import numpy as np
import pytest

from qwsearch import netgen


def random_connected(n, seed, extra=None):
    """Random spanning tree plus extra random edges; always connected."""
    rng = np.random.default_rng(seed)
    edges = set()
    order = rng.permutation(n)
    for i in range(1, n):
        u, v = int(order[i]), int(order[rng.integers(0, i)])
        edges.add((min(u, v), max(u, v)))
    extra = n if extra is None else extra
    while extra > 0:
        u, v = map(int, rng.integers(0, n, size=2))
        if u != v and (min(u, v), max(u, v)) not in edges:
            edges.add((min(u, v), max(u, v)))
            extra -= 1
    return netgen.from_edges(n, sorted(edges))


def edge2():
    return netgen.from_edges(2, [(0, 1)])


@pytest.fixture(scope="session")
def random_graphs():
    sizes = [5, 8, 12, 16, 16, 20, 24, 24, 32, 32, 40, 40, 48, 48, 56, 56, 64, 64, 64, 64, 10, 30]
    return [random_connected(n, seed, extra=int(seed % 3) * n // 2 + 1) for seed, n in enumerate(sizes)]


@pytest.fixture(scope="session")
def mk35_spectrum():
    from qwsearch.spectra import network_spectrum
    return network_spectrum(netgen.mk_hierarchical(3, 5), need_vectors=True)


@pytest.fixture(scope="session")
def mk26_spectrum():
    from qwsearch.spectra import network_spectrum
    return network_spectrum(netgen.mk_hierarchical(2, 6), need_vectors=True)
