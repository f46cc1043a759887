import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("fem", deadline=None, max_examples=25)
settings.load_profile("fem")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(LINES):
            terminalreporter.write_line(LINES[k])
        passed = sum(line.startswith("[PASS]") for line in LINES.values())
        terminalreporter.write_line(f"{passed}/{len(LINES)} criteria passed")
