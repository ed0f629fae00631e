import pytest

# (criterion, passed, detail) lines collected by the acceptance module
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")


@pytest.fixture
def criterion():
    def record(name: str, ok: bool, detail: str = "") -> None:
        ACCEPTANCE_LINES.append((name, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")

    return record
