import numpy as np
import pytest

from inertial_kaczmarz.linalg import DenseMatrix
from inertial_kaczmarz.problems import GenSpec, generate


def random_standardized(rng, rows, cols, c=0.0):
    A = c + (1.0 - c) * rng.random((rows, cols))
    A /= np.linalg.norm(A, axis=1)[:, None]
    x = rng.random(cols)
    return DenseMatrix(A), A @ x


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def coherent_50x20():
    return generate(GenSpec(50, 20, 0.9, 42))


@pytest.fixture(scope="session")
def mixed_30x12():
    return generate(GenSpec(30, 12, 0.1, 7))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
