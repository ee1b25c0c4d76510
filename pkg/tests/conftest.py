import pytest

from seroprev.model import SurveyObservation, TestAccuracy

POPULATION = 51_829_023
CONFIRMED = (12198, 14873, 26635)


@pytest.fixture
def paper_acc():
    return TestAccuracy(42 / 45, 34 / 35)


@pytest.fixture
def paper_surveys():
    return [
        SurveyObservation(1500, 0, CONFIRMED[0] / POPULATION, "2020-06-16"),
        SurveyObservation(1440, 1, CONFIRMED[1] / POPULATION, "2020-08-13"),
        SurveyObservation(1379, 3, CONFIRMED[2] / POPULATION, "2020-10-31"),
    ]


ACCEPTANCE_LINES = []


def record_criterion(number: int, name: str, ok: bool, detail: str = ""):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
