"""Collects one summary line per acceptance criterion."""

import pytest

_LINES = {}


@pytest.fixture
def criterion(request):
    """Tests set .detail to a short measured summary."""

    class Note:
        detail = ""

    note = Note()
    request.node._criterion_note = note
    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    note = getattr(item, "_criterion_note", None)
    number, title = mark.args
    status = "PASS" if rep.passed else "FAIL"
    _LINES[number] = f"criterion {number:>2} {status}  {title}" + (f"  [{note.detail}]" if note and note.detail else "")


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_LINES):
        terminalreporter.write_line(_LINES[k])
