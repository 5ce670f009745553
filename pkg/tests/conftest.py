import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "weylscope", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("weylscope")

ACCEPTANCE_LINES = []


def sample_points(patch, n, seed=0, depth=1):
    """Uniform random points kept clear of the stencil margin."""
    rng = np.random.default_rng(seed)
    box = patch.domain.shrink(patch.margin(depth) * 1.0001)
    return rng.uniform(box.lower, box.upper, size=(n, 4))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
