import pytest

from icoent import spin_system as ss
from icoent.experiments import SpectrumStore


@pytest.fixture(scope="session")
def graph():
    return ss.build_icosahedron()


@pytest.fixture(scope="session")
def store(graph):
    # large enough that the h=0 and h=3 spectra used across files both stay warm
    return SpectrumStore(graph=graph, max_entries=3)


@pytest.fixture(scope="session")
def cache_h3(store):
    return store.get(ss.ModelParams(h=3.0))


@pytest.fixture(scope="session")
def cache_h0(store):
    return store.get(ss.ModelParams(h=0.0))
