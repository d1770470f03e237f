import pytest

from bssc.channel import BsscParams, bssc_kernel

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def anchor_params():
    return BsscParams(0.92, 0.79)


@pytest.fixture
def anchor_kernel(anchor_params):
    return bssc_kernel(anchor_params)


@pytest.fixture
def acceptance_log():
    def record(criterion: int, passed: bool, detail: str) -> None:
        line = f"[criterion {criterion}] {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
