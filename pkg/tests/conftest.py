import time

import pytest

ACCEPTANCE_LINES = []


class Criterion:
    """Times a block and records one PASS/FAIL line for it."""

    def __init__(self, number, title, budget_s):
        self.number, self.title, self.budget_s = number, title, budget_s
        self.detail = ""

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        ok = exc_type is None and elapsed < self.budget_s
        note = self.detail or (str(exc).splitlines()[0] if exc else "")
        if exc_type is None and not ok:
            note = f"over time budget {self.budget_s}s"
        line = (f"{'PASS' if ok else 'FAIL'}  [{self.number}] {self.title}  "
                f"({elapsed:.2f}s / <{self.budget_s}s){'  ' + note if note else ''}")
        ACCEPTANCE_LINES.append((self.number, line))
        print(line)
        if exc_type is None:
            assert elapsed < self.budget_s, f"criterion {self.number} took {elapsed:.2f}s"
        return False


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
