import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from tracial.algebra import matrix_algebra  # noqa: E402


@pytest.fixture(scope="session")
def M1():
    return matrix_algebra(1)


@pytest.fixture(scope="session")
def M2():
    return matrix_algebra(2)


def mat(*rows):
    return np.array(rows, dtype=complex)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
