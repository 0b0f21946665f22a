import numpy as np
import pytest

from wfpd import Regime, validate_params


@pytest.fixture
def params():
    return validate_params(1.0, 0.3, Regime.GENERAL)


@pytest.fixture
def params_nn():
    return validate_params(1.0, 0.3, Regime.THETA_NONNEG)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_ranked(rng, K, n, conc=1.0):
    z = rng.dirichlet(np.full(K, conc), size=n)
    return -np.sort(-z, axis=1)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
