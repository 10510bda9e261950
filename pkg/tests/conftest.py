import math

import pytest
from hypothesis import settings

from motm.config import bundled_config
from motm.heston import HestonParams

settings.register_profile("default", deadline=None, max_examples=200)
settings.load_profile("default")


@pytest.fixture(scope="session")
def fig2():
    return HestonParams.figure2()


@pytest.fixture(scope="session")
def fig2_spec():
    return bundled_config("heston_fig2")


def levy_log_mgf(s, t, sigma=0.2, lam=1.0, a=-0.05, b=0.1):
    """Brownian motion plus compound Poisson jumps a + Exp(mean b).

    The moment of order s is finite iff s < 1/b, for every t: a critical moment
    that does not grow as t -> 0.
    """
    if s >= 1.0 / b:
        return math.inf
    jump = math.exp(a * s) / (1.0 - b * s)
    return t * (0.5 * sigma**2 * s * s + lam * (jump - 1.0))
