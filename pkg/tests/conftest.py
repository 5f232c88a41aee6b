import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    number, title, name = getattr(report, "criterion", (None, None, None))
    if number is None:
        return
    ok, parts = _CRITERIA.get(number, (True, []))
    _CRITERIA[number] = (ok and report.outcome == "passed", parts + [(title, name, report.outcome)])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        rep.criterion = (marker.args[0], marker.args[1], item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, parts = _CRITERIA[number]
        title = parts[0][0]
        detail = "" if ok else "  (" + ", ".join(f"{n}: {o}" for _, n, o in parts if o != "passed") + ")"
        terminalreporter.write_line(
            f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title} [{len(parts)} tests]{detail}")
