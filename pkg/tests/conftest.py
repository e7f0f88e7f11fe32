import os

import numpy as np
import pytest

# every extraction in the test run checks marginals and step conservation
os.environ.setdefault("DTDIFFUSION_CHECK", "1")

from dtdiffusion.video import Video  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def chain_video():
    """Two pixels [200, 150]: one edge 0 -> 1 of weight 50."""
    return Video.from_flat(2, 1, 1, [200, 150])


def random_video(rng, w, h, t):
    return Video(rng.integers(0, 256, size=(t, h, w)))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
