import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label, text): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        label, text = marker.args
        if hasattr(report, "wasxfail"):
            status = "XFAIL" if report.skipped else "XPASS"
        else:
            status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _results[item.nodeid] = (label, text, status, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for label, text, status, duration in sorted(_results.values(), key=lambda r: _sort_key(r[0])):
        terminalreporter.write_line(f"[{status:5}] {label:>4}  {text}  ({duration:.1f} s)")


def _sort_key(label: str):
    digits = "".join(c for c in label if c.isdigit())
    return int(digits or 0), label
