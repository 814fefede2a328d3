import numpy as np
import pytest

from slipstab.functionals import Grid1D, Profile, default_grid
from slipstab.model import SlipConfig


@pytest.fixture(scope="session")
def grid96():
    return default_grid(96)


@pytest.fixture(scope="session")
def grid128():
    return default_grid(128)


@pytest.fixture(scope="session")
def unstable_cfg():
    # mu well below the critical value 1/2
    return SlipConfig(1.0, 1.0, 0.05)


@pytest.fixture(scope="session")
def stable_cfg():
    return SlipConfig(1.0, 1.0, 0.8)


def random_admissible_profile(grid: Grid1D, rng, degree: int = 24) -> Profile:
    """Smooth random polynomial vanishing at both endpoints.

    Low-degree coefficients keep the quadratures exact, so property tests
    compare against true polynomial identities rather than roundoff.
    """
    coefs = rng.standard_normal(degree) * np.exp(-0.3 * np.arange(degree))
    poly = np.polynomial.Polynomial(coefs)(2.0 * grid.nodes - 1.0)
    return Profile(grid, grid.nodes * (1.0 - grid.nodes) * poly)
