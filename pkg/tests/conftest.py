import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    The test body fills ``rec["detail"]``; the line is written whether the
    test passes or fails and repeated in the terminal summary.
    """
    import time

    rec = {"detail": "", "t0": time.perf_counter()}
    yield rec
    elapsed = time.perf_counter() - rec["t0"]
    report = getattr(request.node, "rep_call", None)
    ok = report is not None and report.passed
    line = f"{request.node.name[5:]}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f} s) {rec['detail']}"
    _LINES.append(line)
    print("\n" + line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
