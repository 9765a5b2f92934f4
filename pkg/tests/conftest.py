import pytest

_results: dict[int, tuple[str, str, float]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    # a failing setup or teardown also fails the criterion
    if marker is None or (report.when != "call" and not report.failed):
        return
    number, title = marker.args
    status = "PASS" if report.passed else "FAIL"
    if number not in _results or status == "FAIL":
        _results[number] = (status, title, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        status, title, duration = _results[number]
        terminalreporter.write_line(f"{status}  criterion {number:2d}: {title} ({duration:.1f}s)")
