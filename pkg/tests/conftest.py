import time

import pytest

_LINES: dict[int, str] = {}


def _line(number: int, passed: bool, detail: str) -> str:
    return f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {detail}"


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion; returns ``passed``.

    ``limit`` is the runtime budget in seconds, measured from fixture setup
    unless ``elapsed`` is given (work done in a shared fixture).
    """
    number = request.node.get_closest_marker("acceptance").args[0]
    start = time.perf_counter()

    def record(passed: bool, detail: str, limit: float | None = None, elapsed: float | None = None) -> bool:
        if elapsed is None:
            elapsed = time.perf_counter() - start
        if limit is not None:
            detail = f"{detail}; {elapsed:.1f}s (limit {limit:g}s)"
            passed = passed and elapsed < limit
        _LINES[number] = _line(number, passed, detail)
        print(_LINES[number])
        return passed

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and report.failed and marker.args[0] not in _LINES:
        _LINES[marker.args[0]] = _line(marker.args[0], False, f"error: {call.excinfo.typename}: {call.excinfo.value}")


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_LINES):
            terminalreporter.write_line(_LINES[number])
