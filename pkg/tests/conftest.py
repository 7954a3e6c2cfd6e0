"""Per-criterion PASS/FAIL summary for the acceptance suite.

Tests marked ``criterion(n)`` pool their outcomes; the summary prints one
line per criterion. Criterion 8 also bounds the wall time of the whole run.
"""

import time

import pytest
from hypothesis import settings

# wall-clock deadlines only add flakiness on a loaded machine
settings.register_profile("vcforge", deadline=None)
settings.load_profile("vcforge")

SUITE_BUDGET = 300.0
_results: dict[int, dict] = {}
_owner: dict[str, int] = {}
_start = [0.0]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_sessionstart(session):
    _start[0] = time.monotonic()


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _owner[item.nodeid] = m.args[0]
            _results.setdefault(m.args[0], {"ok": True, "ran": False, "notes": []})


def pytest_runtest_logreport(report):
    n = _owner.get(report.nodeid)
    if n is None:
        return
    _results[n]["ran"] = True
    if report.failed or report.skipped:
        _results[n]["ok"] = False


@pytest.fixture
def note(request):
    n = request.node.get_closest_marker("criterion").args[0]
    return _results[n]["notes"].append


def pytest_sessionfinish(session):
    if 8 in _results:
        elapsed = time.monotonic() - _start[0]
        r = _results[8]
        r["notes"].append(f"whole run {elapsed:.1f} s (budget {SUITE_BUDGET:.0f} s)")
        if elapsed >= SUITE_BUDGET:
            r["ok"] = False
            session.exitstatus = pytest.ExitCode.TESTS_FAILED


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        r = _results[n]
        status = "PASS" if r["ok"] and r["ran"] else "FAIL"
        detail = "; ".join(r["notes"]) if r["ran"] else "not run"
        terminalreporter.write_line(f"criterion {n}: {status}  {detail}")
