import os

import pytest

# keep test runs independent of the host's core count
os.environ.setdefault("EFBQC_WORKERS", "1")

_CRITERIA = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    key = props["criterion"]
    ok = report.passed
    prev = _CRITERIA.get(key)
    detail = props.get("detail", "")
    if prev is None:
        _CRITERIA[key] = [ok, [detail] if detail else []]
    else:
        prev[0] = prev[0] and ok
        if detail:
            prev[1].append(detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: int(k)):
        ok, details = _CRITERIA[key]
        line = f"criterion {key}: {'PASS' if ok else 'FAIL'}"
        if details:
            line += "  (" + "; ".join(details) + ")"
        terminalreporter.write_line(line)


@pytest.fixture
def criterion(record_property):
    """Tag a test with an acceptance criterion and attach a detail string."""

    def tag(number, detail=""):
        record_property("criterion", str(number))
        if detail:
            record_property("detail", detail)

    return tag
