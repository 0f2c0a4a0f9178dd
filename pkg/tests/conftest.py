import time

import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []
SUITE_BUDGET_S = 60.0

_session = {"start": 0.0, "props_passed": 0, "props_failed": 0}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def report():
    def _report(criterion: str, ok: bool, detail: str = "") -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}" + (f" -- {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)

    return _report


def pytest_sessionstart(session):
    _session["start"] = time.perf_counter()


def pytest_runtest_logreport(report):
    if "test_properties.py" in report.nodeid and (report.when == "call" or report.failed):
        _session["props_passed" if report.passed else "props_failed"] += 1


def pytest_sessionfinish(session, exitstatus):
    """Criterion 7 when the property suites ran in this session: all green within budget."""
    ran = _session["props_passed"] + _session["props_failed"]
    if not ACCEPTANCE_LINES or not ran:
        return
    elapsed = time.perf_counter() - _session["start"]
    ok = _session["props_failed"] == 0 and elapsed < SUITE_BUDGET_S
    ACCEPTANCE_LINES.append(
        f"[{'PASS' if ok else 'FAIL'}] 7 property suites -- {_session['props_passed']}/{ran} passed, "
        f"full suite {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s)"
    )
    if not ok and session.exitstatus == 0:
        session.exitstatus = pytest.ExitCode.TESTS_FAILED


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split("] ", 1)[1][:1]):
            terminalreporter.write_line(line)
