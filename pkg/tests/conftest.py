import math

import pytest

from fracfisher import GridSpec, linnik_density, stable_density


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: reference-grid sweeps and certificates")


@pytest.fixture(scope="session")
def reference_grid() -> GridSpec:
    return GridSpec()


@pytest.fixture(scope="session")
def small_grid() -> GridSpec:
    return GridSpec(n_points=4096, x_max=100.0)


@pytest.fixture(scope="session")
def unit_xi_grid() -> GridSpec:
    """dξ = 1, so ξ = 1 sits one sample right of the center."""
    return GridSpec(n_points=1024, x_max=math.pi)


@pytest.fixture(scope="session")
def linnik15(reference_grid):
    return linnik_density(1.5, reference_grid)


@pytest.fixture(scope="session")
def stable15(reference_grid):
    return stable_density(1.5, reference_grid)
