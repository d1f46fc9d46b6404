"""Shared fixtures: the expensive runs are built once per session."""

import time

import pytest
from gmpy2 import mpq

from qbiject.basic import run_basic
from qbiject.heights import HeightSchedule, run_heights
from qbiject.pila import SlowFunction, run_pila


class TimedRun:
    def __init__(self, builder):
        t0 = time.monotonic()
        self.result = builder()
        self.seconds = time.monotonic() - t0


@pytest.fixture(scope="session")
def basic21():
    return TimedRun(lambda: run_basic(21))


@pytest.fixture(scope="session")
def basic40():
    return TimedRun(lambda: run_basic(40))


@pytest.fixture(scope="session")
def basic61():
    return TimedRun(lambda: run_basic(61))


@pytest.fixture(scope="session")
def heights_strict5():
    return TimedRun(lambda: run_heights(5, HeightSchedule.strict()))


@pytest.fixture(scope="session")
def heights_scaled25():
    return TimedRun(lambda: run_heights(25, HeightSchedule.scaled(2)))


@pytest.fixture(scope="session")
def pila3():
    return TimedRun(lambda: run_pila(2, SlowFunction(mpq(2), 1)))
