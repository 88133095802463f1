from __future__ import annotations

import contextlib

import pytest

from tests.samples import load_example
from vrcsolve.harness import Challenge

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def example() -> Challenge:
    return load_example()


@pytest.fixture
def criterion(capsys):
    """Record the outcome of an acceptance criterion and print one line for it."""

    @contextlib.contextmanager
    def check(number: int, title: str):
        ok = False
        try:
            yield
            ok = True
        finally:
            line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}"
            _CRITERIA[number] = (ok, line)
            with capsys.disabled():
                print(f"\n{line}")

    return check


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[n][1])
