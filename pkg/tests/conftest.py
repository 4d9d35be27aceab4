import pytest

_criteria = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    tag, title = mark.args
    entry = _criteria.setdefault(tag, {"title": title, "passed": True, "ran": False})
    if call.when == "call":
        entry["ran"] = True
    if call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception):
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(_criteria, key=lambda t: int(t[2:])):
        e = _criteria[tag]
        status = "PASS" if e["passed"] and e["ran"] else "FAIL"
        terminalreporter.write_line(f"{tag:<5} {status}  {e['title']}")
