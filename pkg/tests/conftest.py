import math

import pytest

from multispin_sg.materials import NAPHTHALENE
from multispin_sg.params import derive_from_values
from multispin_sg.scenario import load_scenario


@pytest.fixture(scope="session")
def material():
    return NAPHTHALENE


@pytest.fixture(scope="session")
def scen():
    return {k: load_scenario(f"scenario_{k}") for k in "abc"}


@pytest.fixture(scope="session")
def row_a(scen):
    return scen["a"].derived()


@pytest.fixture(scope="session")
def row_c(scen):
    return scen["c"].derived()


@pytest.fixture(scope="session")
def d44():
    """r = 44 nm at 1e4 T/m, ground state."""
    return derive_from_values(44e-9, 1e4, NAPHTHALENE)


def rel(a, b):
    return abs(a - b) / abs(b) if b else abs(a)


def within_pct(value, target, pct):
    return abs(value - target) <= pct / 100.0 * abs(target)


def rounded_match(value, target, pct=5.0):
    """True when ``value`` is within ``pct`` of ``target`` either raw or after rounding to its significant digits."""
    if within_pct(value, target, pct):
        return True
    digits = len(f"{target:e}".split("e")[0].replace(".", "").replace("-", "").rstrip("0")) or 1
    rounded = float(f"{value:.{digits - 1}e}")
    return math.isclose(rounded, target, rel_tol=1e-9) or within_pct(rounded, target, pct)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
