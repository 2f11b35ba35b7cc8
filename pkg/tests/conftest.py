import numpy as np
import pytest

from sepcbf import kernels
from sepcbf._accel import NUMBA_AVAILABLE
from sepcbf.geometry import Pose, Superellipsoid

BACKENDS = ["numpy"] + (["numba"] if NUMBA_AVAILABLE else [])

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = {}


@pytest.fixture(params=BACKENDS)
def backend(request):
    """Run the test once per kernel backend."""
    before = kernels.get_backend()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(before)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def disc(x, y=0.0, p=2.0, r=1.0):
    return Superellipsoid(np.eye(2) * r, p), Pose(np.eye(2), [x, y])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
