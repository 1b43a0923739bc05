import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sgcl import kernels  # noqa: E402
from sgcl.graph import InteractionGraph  # noqa: E402


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request, monkeypatch):
    """Run a test once per available kernel implementation."""
    impl = kernels.available_backends()[request.param]
    monkeypatch.setattr(kernels, "_impl", impl)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_graph():
    """6 users x 6 items, two loose clusters."""
    edges = [(0, 0), (0, 1), (1, 0), (1, 2), (2, 1), (2, 2), (2, 3),
             (3, 3), (3, 4), (4, 4), (4, 5), (5, 5), (5, 3), (1, 4)]
    return InteractionGraph(6, 6, edges)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.VERDICTS):
        terminalreporter.write_line(mod.VERDICTS[n])
