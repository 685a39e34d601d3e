import numpy as np
import pytest

from services.two_level import TwoLevelParams


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long end-to-end runs (omega = 0.001 and similar)")


@pytest.fixture
def rng():
    return np.random.default_rng(20240229)


@pytest.fixture
def precessing():
    """Non-Hermitian precessing field used across the suites"""
    return TwoLevelParams(E=1.0, theta=np.pi / 2, phi_i=0.2, omega=0.5)


@pytest.fixture
def resonant():
    """Q + i omega = 0 exactly: beta_1 = 0.1 with omega = 2.5 and E = 1"""
    theta = 2.0 * np.arctan(1.0 / (3.0 * np.exp(0.2)))
    return TwoLevelParams(E=1.0, theta=theta, phi_i=0.2, omega=2.5)


@pytest.fixture
def all_periodic():
    """W(T) = 1 with Q + i omega != 0, so the drive endpoint vanishes"""
    omega = 2.5
    beta1 = 1.0 / (1.0 + np.exp(-0.4))
    return TwoLevelParams(E=omega * (1.0 - beta1), theta=np.pi / 2, phi_i=0.2, omega=omega)
