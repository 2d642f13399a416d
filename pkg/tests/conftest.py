import pytest

_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance line; returns the verdict so tests can assert on it."""
    def _report(criterion: str, ok: bool, detail: str) -> bool:
        _LINES.append(f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}")
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
