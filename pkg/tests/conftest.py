import numpy as np
import pytest

from reachquant.config import example_config

A_ROT = np.array([[-1.0, -4.0], [4.0, -1.0]])


def rotation_scaling(t):
    """exp(A_ROT t) in closed form: e^{-t} times a rotation by 4t."""
    c, s = np.cos(4 * t), np.sin(4 * t)
    return np.exp(-t) * np.array([[c, -s], [s, c]])


@pytest.fixture(scope="session")
def cfg():
    return example_config()


@pytest.fixture(scope="session")
def plant(cfg):
    return cfg.plant()


@pytest.fixture(scope="session")
def cert(cfg):
    return cfg.certificate()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
