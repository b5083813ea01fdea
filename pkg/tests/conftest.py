import numpy as np
import pytest

from nomagroup.scenario import Scenario, UserProfile


def make_scenario(gains, rates, group_count=1, noise=1.0, seed=0):
    users = tuple(UserProfile(id=k, channel_gain_sq=float(h), target_rate=float(r))
                  for k, (h, r) in enumerate(zip(gains, rates)))
    return Scenario(users=users, group_count=group_count, noise_power=noise, seed=seed)


def random_scenario(rng, n, group_count, spread=3.0):
    """Small well-conditioned instance: gains over ``spread`` decades, rates in [0.5, 4]."""
    gains = 10.0 ** rng.uniform(-spread, 0.0, n)
    rates = rng.uniform(0.5, 4.0, n)
    return make_scenario(gains, rates, group_count, noise=1.0, seed=int(rng.integers(1 << 31)))


@pytest.fixture
def two_user():
    return make_scenario([4.0, 1.0], [1.0, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
