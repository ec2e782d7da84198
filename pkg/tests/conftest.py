import numpy as np
import pytest

from rmnkq.landscape import RmnkConfig, RmnkLandscape, generate


def make_landscape(tables, links=None, rho=0.0, seed=0):
    """Landscape from explicit ``(M, N, 2**(K+1))`` tables and ``(M, N, K)`` links."""
    tables = np.asarray(tables, dtype=float)
    m, n, rows = tables.shape
    k = rows.bit_length() - 2
    if links is None:
        links = np.zeros((m, n, 0), dtype=int)
    return RmnkLandscape(RmnkConfig(n, m, k, rho, seed), links, tables)


@pytest.fixture
def two_bit_landscape():
    # f_1 = {0: 0.2, 1: 0.8}, f_2 = {0: 0.4, 1: 0.6}
    return make_landscape([[[0.2, 0.8], [0.4, 0.6]]])


@pytest.fixture
def small_landscape():
    return generate(RmnkConfig(8, 2, 1, 0.0, 5))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    """Log one acceptance line (shown in the terminal summary) and fail the test if needed."""
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
