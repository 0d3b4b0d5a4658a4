import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("sandstab", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("sandstab")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)
    passed = sum(" PASS " in line for line in lines)
    terminalreporter.write_line(f"{passed}/{len(lines)} criteria passed")
