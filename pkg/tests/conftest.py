import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

GOLDEN = Path(__file__).parent / "golden"

_criteria = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line; marks FAIL unless the test body completes."""

    def record(number, title, detail=""):
        _criteria[number] = [title, "FAIL", detail]

        def passed(extra=""):
            _criteria[number][1] = "PASS"
            if extra:
                _criteria[number][2] = extra

        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status, detail = _criteria[number]
        line = f"criterion {number}: {status}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def golden_dir():
    return GOLDEN
