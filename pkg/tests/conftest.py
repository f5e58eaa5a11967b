import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    detail = getattr(item, "criterion_detail", "")
    if report.when == "call":
        _CRITERIA[number] = ("PASS" if report.passed else "FAIL", title, detail)
    elif report.failed or report.skipped:
        _CRITERIA.setdefault(number, ("FAIL" if report.failed else "SKIP", title, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[number]
        line = f"{status} criterion {number}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))


@pytest.fixture
def detail(request):
    """Attach a short measured result to the acceptance summary line."""

    def record(text: str) -> None:
        request.node.criterion_detail = text

    return record
