from __future__ import annotations

import time

import pytest

from ._data import load


@pytest.fixture
def table1():
    return load("table1")


@pytest.fixture
def table2():
    return load("table2")


@pytest.fixture
def table3():
    return load("table3")


# -- acceptance summary -------------------------------------------------------------

_criteria: dict[int, dict] = {}
# criterion 7 also bounds the wall time of the whole suite
SUITE_LIMIT_S = 60.0
_started = time.perf_counter()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    n, title = marker
    entry = _criteria.setdefault(n, {"title": title, "passed": 0, "failed": 0})
    entry["passed" if report.passed else "failed"] += 1


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = tuple(m.args)


def pytest_sessionstart(session):
    global _started
    _started = time.perf_counter()


def pytest_sessionfinish(session, exitstatus):
    if 7 in _criteria:
        elapsed = time.perf_counter() - _started
        _criteria[7]["title"] += f"; suite wall time {elapsed:.1f} s (limit {SUITE_LIMIT_S:.0f} s)"
        if elapsed >= SUITE_LIMIT_S:
            _criteria[7]["failed"] += 1
            session.exitstatus = pytest.ExitCode.TESTS_FAILED


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        status = "PASS" if e["failed"] == 0 else "FAIL"
        terminalreporter.write_line(
            f"criterion {n}: {status}  {e['title']}  ({e['passed']} passed, {e['failed']} failed)"
        )
