import logging
import os
import sys
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from lindep.ec_rational import CurveQ, point  # noqa: E402

FIXTURE_CURVES = {
    "x3+17": (0, 17),
    "x3-2": (0, -2),
    "x3-x": (-1, 0),
    "x3+1": (0, 1),
    "x3+3": (0, 3),
}

# Rational points used across tests (on y^2 = x^3 + 17 unless noted).
P1 = point(-2, 3)
P2 = point(2, 5)
MORDELL_17_POINTS = [
    point(-2, 3),
    point(2, 5),
    point(4, 9),
    point(8, 23),
    point(Fraction(1, 4), Fraction(-33, 8)),
    point(-1, 4),
    point(43, 282),
]
X3_MINUS_2_POINT = point(3, 5)
X3_PLUS_3_POINT = point(1, 2)


@pytest.fixture
def e17():
    return CurveQ(0, 17)


@pytest.fixture(params=sorted(FIXTURE_CURVES), ids=sorted(FIXTURE_CURVES))
def fixture_curve(request):
    return CurveQ(*FIXTURE_CURVES[request.param])


class _AlarmCounter(logging.Handler):
    def __init__(self):
        super().__init__(level=logging.ERROR)
        self.count = 0

    def emit(self, record):
        if "saturation fallback fired" in record.getMessage():
            self.count += 1


_alarms = _AlarmCounter()
ACCEPTANCE_LINES: list[str] = []


def pytest_sessionstart(session):
    logging.getLogger("lindep.detector").addHandler(_alarms)


def alarm_count() -> int:
    return _alarms.count


def pytest_collection_modifyitems(items):
    # acceptance runs last so the suite-wide alarm count is final when it is checked
    items.sort(key=lambda item: item.module.__name__.endswith("test_acceptance"))


def pytest_sessionfinish(session, exitstatus):
    if _alarms.count:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    terminalreporter.write_line(f"saturation fallback firings across the suite: {_alarms.count}")
