import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_full_rank(rng, d, m, cond_max=1e3):
    while True:
        W = rng.standard_normal((d, m))
        if np.linalg.cond(W) < np.sqrt(cond_max):
            return W


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
