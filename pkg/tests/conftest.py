import numpy as np
import pytest

from nfupa.channel import UpaGeometry

# (number, title, passed, detail) rows filled by test_acceptance.py
ACCEPTANCE_LINES: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def geom16():
    return UpaGeometry(16, 16)


@pytest.fixture(scope="session")
def geom_full():
    return UpaGeometry(32, 256)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}")
