import sys

import numpy as np
import pytest

from mstab import tridiag
from mstab.harness import make_rhs


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tri40():
    return tridiag(2.0, 3.0, 1.0, 40)


@pytest.fixture(scope="session")
def rhs40():
    return make_rhs("ones", 40), make_rhs("sinewave", 40)


def random_matrix(rng, n, shift=3.0):
    """Well conditioned nonsymmetric test matrix."""
    return shift * np.eye(n) + rng.standard_normal((n, n)) / np.sqrt(n)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
