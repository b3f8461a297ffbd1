import pytest

# criterion label -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


def record(label: str, passed: bool, detail: str) -> None:
    ACCEPTANCE[label] = (bool(passed), detail)
    print(f"[acceptance] {label}: {'PASS' if passed else 'FAIL'} - {detail}")


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE, key=lambda s: (len(s.split()[0]), s)):
        passed, detail = ACCEPTANCE[label]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
