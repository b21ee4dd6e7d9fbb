import pytest

_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _results[number] = (title, report.passed, getattr(item, "_acceptance_note", ""))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        title, passed, note = _results[number]
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}"
        if note:
            line += f"  ({note})"
        terminalreporter.write_line(line)
