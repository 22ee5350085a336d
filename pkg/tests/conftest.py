import numpy as np
import pytest

from redt.data import load_benchmark

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def german():
    return load_benchmark("german")


@pytest.fixture(scope="session")
def crx():
    return load_benchmark("crx")


@pytest.fixture(scope="session")
def cmc():
    return load_benchmark("cmc")


def random_mixed_labels(rng, n, k, alpha=None):
    """Rows of alpha * one-hot + (1 - alpha) * Dirichlet, renormalized."""
    hard = np.zeros((n, k))
    hard[np.arange(n), rng.integers(0, k, n)] = 1.0
    soft = rng.dirichlet(np.ones(k), n)
    a = rng.uniform() if alpha is None else alpha
    return a * hard + (1 - a) * soft
