import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dielectric_limit.spectral import TorusField, TorusGrid

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def grid2():
    return TorusGrid(32, 2)


@pytest.fixture(scope="session")
def grid3():
    return TorusGrid(16, 3)


def band_limited(grid, rng, rank="vector", kmax=4, scale=1.0):
    """Random real trigonometric polynomial with modes |k_i| <= kmax."""
    mask = np.ones(grid.spec_shape, dtype=bool)
    for k in grid.kabs:
        mask &= k <= kmax
    ncomp = 3 if rank == "vector" else 1
    shape = (ncomp,) + grid.spec_shape
    spec = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * mask
    phys = grid.ifft(spec)
    phys *= scale / np.max(np.abs(phys))
    return TorusField(grid, phys if rank == "vector" else phys[0])
