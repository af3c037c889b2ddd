import numpy as np
import pytest

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def report():
    """Record the pass/fail line of an acceptance criterion."""
    def _report(number: int, ok: bool, text: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {text}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
