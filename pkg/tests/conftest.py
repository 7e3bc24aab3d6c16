"""Collects acceptance-criterion outcomes and prints one PASS/FAIL line per criterion."""

from collections import defaultdict

import pytest

N_CRITERIA = 8
_outcomes: dict[int, dict[str, str]] = defaultdict(dict)
_details: dict[int, list[str]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(k): test belongs to acceptance criterion k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    k = marker.args[0]
    status = _outcomes[k]
    if report.failed:
        status[item.nodeid] = "FAIL"
    elif report.when == "call" and item.nodeid not in status:
        status[item.nodeid] = "SKIP" if report.skipped else "PASS"
    if report.when == "call":
        _details[k].extend(f"{name}={value}" for name, value in item.user_properties)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for k in range(1, N_CRITERIA + 1):
        results = _outcomes.get(k)
        if not results:
            verdict = "NOT RUN"
        elif "FAIL" in results.values():
            verdict = "FAIL"
        elif all(v == "PASS" for v in results.values()):
            verdict = "PASS"
        else:
            verdict = "SKIP"
        detail = "; ".join(_details.get(k, []))
        terminalreporter.write_line(f"criterion {k}: {verdict}  ({len(results or {})} tests) {detail}".rstrip())
