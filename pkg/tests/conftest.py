import numpy as np
import pytest

from dvppres import (DisturbanceForecast, DisturbanceScenario, GridParameters,
                     IbrSpec, SecurityLimits)
from dvppres.response import derive_second_order


@pytest.fixture
def case_grid():
    """Aggregate constants of the bundled case study (50 Hz per-unit base)."""
    return GridParameters(h0=10.0, d0=2.0, r=10.0, t_sg=7.0, f_base=50.0)


@pytest.fixture
def case_limits():
    return SecurityLimits(rocof_lim=0.4, nadir_lim=0.55, ss_lim=0.45)


@pytest.fixture
def case_forecast():
    return DisturbanceForecast(
        n=5, tau=60.0,
        magnitudes=(0.095, 0.109, -0.204, -0.158, 0.253),
        probabilities=(0.8, 0.5, 0.8, 0.9, 0.7))


@pytest.fixture
def case_ibrs():
    a = (3.0, 4.0, 1.0, 1.0, 2.0, 1.0)
    b = (2.0, 3.0, 1.0, 1.0, 1.6, 1.0)
    p_av = (0.1212, 0.109, 0.0122, 0.0242, 0.0848, 0.0484)
    return [IbrSpec(a[i], b[i], p_av[i], (0.1, 6.0), (0.1, 6.0))
            for i in range(6)]


@pytest.fixture
def worst_timing():
    """The stacked worst scenario: instants [tau, tau, 3tau, 3tau, 4tau]."""
    return DisturbanceScenario((60.0, 60.0, 180.0, 180.0, 240.0))


def random_underdamped(rng, zeta_range=(0.05, 0.98)):
    """Rejection-sample grid parameters with an underdamped aggregate loop."""
    while True:
        g = GridParameters(
            h0=rng.uniform(3, 40), d0=rng.uniform(0, 5),
            r=rng.uniform(3, 20), t_sg=rng.uniform(2, 10),
            h_dvpp=rng.uniform(0, 30), d_dvpp=rng.uniform(0, 15))
        try:
            d = derive_second_order(g)
        except Exception:
            continue
        if zeta_range[0] <= d.zeta <= zeta_range[1]:
            return g, d
