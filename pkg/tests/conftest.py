import pytest

_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    key = marker.args
    failed = report.failed or (report.when == "call" and report.skipped)
    if report.when == "call" or failed:
        prev = _OUTCOMES.get(key, "PASS")
        _OUTCOMES[key] = "FAIL" if failed or prev == "FAIL" else "PASS"
        notes = [text for name, text in item.user_properties if name == "measured"]
        _OUTCOMES[key + ("notes",)] = notes


def pytest_terminal_summary(terminalreporter):
    keys = sorted(k for k in _OUTCOMES if len(k) == 2)
    if not keys:
        return
    terminalreporter.section("acceptance criteria")
    for number, title in keys:
        verdict = _OUTCOMES[(number, title)]
        terminalreporter.write_line(f"criterion {number:2d} {verdict}  {title}")
        for note in _OUTCOMES.get((number, title, "notes"), []):
            terminalreporter.write_line(f"              {note}")
