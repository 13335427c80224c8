"""Collects the acceptance criteria outcomes and prints one line per criterion."""

import pytest

_RESULTS = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        if hasattr(rep, "wasxfail"):
            status = "XFAIL" if rep.skipped else "XPASS"
        elif rep.passed:
            status = "PASS"
        elif rep.skipped:
            status = "SKIP"
        else:
            status = "FAIL"
        note = getattr(rep, "wasxfail", "") or ""
        _RESULTS.append((str(mark.args[0]), mark.args[1], status, note))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, note in _RESULTS:
        line = f"criterion {number:>3}  {status:<5}  {title}"
        if note:
            line += f"  [{note}]"
        terminalreporter.write_line(line)
