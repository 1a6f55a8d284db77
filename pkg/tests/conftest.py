"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion at the end of the run."""

import pytest

_RESULTS: dict = {}
_DETAILS: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion check")


@pytest.fixture
def detail(request):
    """Append a line of diagnostics to the summary entry of the current criterion."""
    marker = request.node.get_closest_marker("acceptance")
    key = marker.args[0] if marker else request.node.nodeid

    def add(text):
        _DETAILS.setdefault(key, []).append(str(text))

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _RESULTS[number] = (title, rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, ok = _RESULTS[number]
        tr.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}")
        for line in _DETAILS.get(number, []):
            tr.write_line(f"    {line}")
    passed = sum(ok for _, ok in _RESULTS.values())
    tr.write_line(f"{passed}/{len(_RESULTS)} criteria pass")
