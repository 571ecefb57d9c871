from __future__ import annotations

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tools"))
sys.path.insert(0, str(Path(__file__).resolve().parent))

from sxacml.fixtures import FIXTURES_DIR, load_fixture_stack  # noqa: E402

CRITERIA = {
    1: "UC1 end-to-end",
    2: "UC2 end-to-end",
    3: "legal override",
    4: "reasoner oracle equivalence",
    5: "combining-algorithm algebra",
    6: "geospatial accuracy",
    7: "parser robustness",
    8: "multi-resource cardinality",
    9: "service/CLI parity and atomic reload",
}

_outcomes: dict[int, list[bool]] = {}


@pytest.fixture(scope="session")
def stack():
    return load_fixture_stack()


@pytest.fixture(scope="session")
def engine(stack):
    return stack.engine()


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES_DIR


def pytest_runtest_logreport(report):
    number = getattr(report, "criterion", None)
    if number is None:
        return
    if report.when == "call" or report.failed:
        _outcomes.setdefault(number, []).append(report.passed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number, title in CRITERIA.items():
        results = _outcomes.get(number)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {number} ({title}): {status}")
