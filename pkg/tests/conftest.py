import pytest

_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one summary line per acceptance criterion; printed at the end of the run."""

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
