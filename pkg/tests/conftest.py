import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion number -> (passed, one-line summary); filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record_acceptance():
    def record(number, passed, summary):
        ACCEPTANCE[number] = (bool(passed), summary)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, summary = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {summary}")
