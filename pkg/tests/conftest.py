import pytest

_LINES: dict[int, str] = {}


@pytest.fixture
def verdict_line():
    """Record one PASS/FAIL line for an acceptance criterion; assert afterwards."""
    def record(index: int, name: str, ok: bool, detail: str) -> bool:
        line = f"acceptance {index}/9 {name:<22} {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES[index] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for i in sorted(_LINES):
            terminalreporter.write_line(_LINES[i])
