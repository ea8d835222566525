"""Acceptance-criteria bookkeeping: every criterion records one line that is
echoed at the end of the pytest run, pass or fail."""
from __future__ import annotations

import threading

_LOCK = threading.Lock()
_RESULTS: list[tuple[int, str, bool, str]] = []


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> None:
    with _LOCK:
        _RESULTS.append((number, title, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number, title, passed, detail in sorted(_RESULTS):
        verdict = "PASS" if passed else "FAIL"
        suffix = f" ({detail})" if detail else ""
        tr.write_line(f"criterion {number} [{verdict}] {title}{suffix}")
