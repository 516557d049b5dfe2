import pytest

# acceptance verdict lines, printed once at the end of the session
VERDICTS: list[str] = []


@pytest.fixture(scope="session")
def verdict():
    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"CRITERION {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        VERDICTS.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
