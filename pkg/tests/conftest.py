import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=60
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_cells(rng, h, w, p_unknown=0.4, p_occ=0.15):
    """Random UNKNOWN/FREE/OCCUPIED grid."""
    u = rng.uniform(size=(h, w))
    cells = np.full((h, w), 1, dtype=np.uint8)
    cells[u < p_unknown] = 0
    cells[u > 1.0 - p_occ] = 2
    return cells


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
