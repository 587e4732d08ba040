from __future__ import annotations

import pytest

from bldmaps import fixtures

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(session, config, items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            _CRITERIA.setdefault(number, {"title": title, "outcomes": []})
            item.user_properties.append(("criterion", number))


def pytest_runtest_logreport(report):
    number = dict(report.user_properties).get("criterion")
    if number is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _CRITERIA[number]["outcomes"].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        outcomes = entry["outcomes"]
        ok = bool(outcomes) and all(o == "passed" for o in outcomes)
        status = "PASS" if ok else ("NOT RUN" if not outcomes else "FAIL")
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {entry['title']}")


@pytest.fixture(scope="session")
def corpus():
    return fixtures.corpus()


@pytest.fixture(scope="session")
def covers():
    return fixtures.cover_corpus()
