import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from thermokms.shift import CylinderFunction

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def H12():
    """Depth-1 potential with values (1, 2) on the 2-shift."""
    return CylinderFunction(2, 1, [1.0, 2.0])


@pytest.fixture
def p_half():
    return CylinderFunction.constant(2, 0.5)


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion, in criterion order."""
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is None:
        return
    broken = {
        rep.nodeid
        for key in ("failed", "error")
        for rep in terminalreporter.stats.get(key, [])
        if "test_acceptance" in rep.nodeid
    }
    terminalreporter.section("acceptance criteria")
    for num in range(1, 11):
        tag = f"criterion_{num:02d}"
        if num in mod.RESULTS:
            terminalreporter.write_line(mod.RESULTS[num][1])
        elif any(tag in nodeid for nodeid in broken):
            terminalreporter.write_line(f"[FAIL] criterion {num:>2}: raised before reporting a result")
        else:
            terminalreporter.write_line(f"[----] criterion {num:>2}: not run in this session")
