"""Shared fixtures and the acceptance-report hook.

Acceptance tests append one line per criterion to REPORT; the terminal
summary prints them together at the end of the run so the overall
pass/fail pattern is visible in one block.
"""
import numpy as np
import pytest

REPORT = []


def record_criterion(number, passed, detail):
    status = "PASS" if passed else "FAIL"
    REPORT.append(f"criterion {number}: {status}  {detail}")
    return passed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(REPORT):
        terminalreporter.write_line(line)


@pytest.fixture
def resonant_emitter():
    from cmsense import two_level_model
    return two_level_model(omega=1.0, delta=0.0, gamma=1.0)


@pytest.fixture
def detuned_emitter():
    from cmsense import two_level_model
    return two_level_model(omega=1.0, delta=0.3, gamma=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
