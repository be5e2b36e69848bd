import numpy as np
import pytest

from solitonlab.radial import make_grid
from solitonlab.solitons import aubin_values, nls_ground_state


@pytest.fixture(scope="session")
def grid50():
    return make_grid(50.0, 4000)


@pytest.fixture(scope="session")
def grid40():
    return make_grid(40.0, 3000)


@pytest.fixture(scope="session")
def aubin50(grid50):
    return aubin_values(1.0, grid50)


@pytest.fixture(scope="session")
def cubic_profile(grid40):
    """sigma = 1, alpha = 1, d = 3 ground state on the standard grid."""
    return nls_ground_state(1.0, 1.0, 3, grid40)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
