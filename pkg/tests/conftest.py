import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from quantumness.criterion import canonical_pair  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def pair_star():
    return canonical_pair()


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
