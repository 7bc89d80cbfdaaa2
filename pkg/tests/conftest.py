from fractions import Fraction as Fr
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ffkit.bandlimited import BandlimitedFunction, BandlimitedSystem
from ffkit.filterbank import TrigPolyMatrix
from ffkit.torus import FrequencySet

settings.register_profile("ffkit", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ffkit")


def indicator(*pairs, value=1) -> BandlimitedFunction:
    return BandlimitedFunction.indicator(FrequencySet.of(*pairs), value)


def shannon_psi() -> BandlimitedFunction:
    return indicator((-2, -1), (1, 2))


def sinc() -> BandlimitedFunction:
    return indicator((-1, 1))


def journe_psi() -> BandlimitedFunction:
    return indicator((Fr(-32, 7), -4), (-1, Fr(-4, 7)), (Fr(4, 7), 1), (4, Fr(32, 7)))


def system(*fs) -> BandlimitedSystem:
    return BandlimitedSystem.of(list(fs))


def row_filter(*rows, start=0) -> TrigPolyMatrix:
    """Column filter bank: one coefficient sequence per row, ``r = 1``."""
    return TrigPolyMatrix.from_sequences([[list(r)] for r in rows], start)


@pytest.fixture
def haar():
    return row_filter([0.5, 0.5]), row_filter([0.5, -0.5])


@pytest.fixture
def hat():
    s = math.sqrt(2) / 4
    return (row_filter([0.25, 0.5, 0.25]),
            row_filter([-0.25, 0.5, -0.25], [s, 0, -s]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def accept(number: int, ok: bool, note: str) -> None:
    """Record one acceptance line; the summary hook prints them all."""
    line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {note}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
