import pytest

_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, title = mark.args
    ok, _ = _results.get(n, (True, title))
    if rep.failed or (rep.when == "call" and rep.skipped):
        ok = False
    _results[n] = (ok, title)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        ok, title = _results[n]
        terminalreporter.write_line(f"AC{n} {'PASS' if ok else 'FAIL'}  {title}")
