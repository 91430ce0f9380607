"""Shared pytest hooks.

Tests marked ``criterion(n, name)`` are acceptance checks. Their outcome and
any ``record_property`` values are echoed as one PASS/FAIL line each at the
end of the run.
"""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, name): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, name = mark.args
    entry = _CRITERIA.setdefault(number, {"name": name, "passed": True, "seen": False, "props": []})
    if report.when == "call" or report.failed:
        entry["seen"] = True
        entry["passed"] &= report.passed
        entry["props"] = list(item.user_properties)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["seen"] and e["passed"] else "FAIL"
        detail = ", ".join(f"{k}={v}" for k, v in e["props"])
        terminalreporter.write_line(f"criterion {number:2d} {e['name']}: {status}" + (f"  [{detail}]" if detail else ""))
