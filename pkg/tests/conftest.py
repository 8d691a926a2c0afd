import numpy as np
import pytest

from simjoin import RawRelation, SyntheticModel, kernels


@pytest.fixture
def rng():
    return np.random.default_rng(0x5EED)


@pytest.fixture
def small_relations():
    left = RawRelation("left", [f"l_{i}" for i in range(40)])
    right = RawRelation("right", [f"r_{i}" for i in range(30)])
    return left, right


def make_model(dim=16, seed=7, latency_ns=0):
    return SyntheticModel(dim, seed=seed, latency_ns=latency_ns)


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run a test under every available kernel backend."""
    prev = kernels.active_backend()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(prev)
