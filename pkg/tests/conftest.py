import numpy as np
import pytest

from road.numerics import RngStream


def random_spd(p, gen, jitter=0.5):
    """Random unit-diagonal SPD matrix (correlation-like)."""
    a = gen.standard_normal((p, p))
    s = a @ a.T / p + jitter * np.eye(p)
    d = np.sqrt(np.diag(s))
    return s / np.outer(d, d)


def random_instance(p, seed, stream=0):
    """Seeded (sigma, mu_d) pair with sigma SPD and mu_d nonzero."""
    gen = RngStream(seed, stream).generator()
    sigma = random_spd(p, gen)
    mu = gen.standard_normal(p)
    while np.abs(mu).max() < 1e-3:
        mu = gen.standard_normal(p)
    return sigma, mu


@pytest.fixture
def rng_factory():
    return RngStream
