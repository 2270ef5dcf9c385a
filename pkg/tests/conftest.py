import numpy as np
import pytest

from lemniscate.geometry import CompactSet, Disk, ellipse
from lemniscate.green_solver import solve


@pytest.fixture(scope="session")
def disk_set():
    return CompactSet((Disk(0j, 1.0),), (True,))


@pytest.fixture(scope="session")
def two_disks():
    return CompactSet((Disk(-4 + 0j, 1.0), Disk(4 + 0j, 1.0)), (True, True))


@pytest.fixture(scope="session")
def ellipse_set():
    return CompactSet((ellipse(2.0, 1.0),), (True,))


@pytest.fixture(scope="session")
def disk_sol(disk_set):
    return solve(disk_set, 64)


@pytest.fixture(scope="session")
def two_sol(two_disks):
    return solve(two_disks, 64)


@pytest.fixture(scope="session")
def ellipse_sol(ellipse_set):
    return solve(ellipse_set, 256)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion."""
    def log(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
