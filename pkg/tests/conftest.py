import math

import pytest

from critwaves.dispersion import (FlowParams, find_alpha_two_modes, h, lhs_dispersion, solve_mu)
from critwaves.grid import Grid
from critwaves.laminar import choose_lambda


def one_mode_point(k, alpha, lam):
    """Flow parameters with ``k`` in the kernel at the given ``alpha`` and ``lambda``."""
    a = lhs_dispersion(alpha, k)
    return FlowParams(solve_mu(a, alpha, lam), alpha, lam)


@pytest.fixture(scope="session")
def grid():
    return Grid(64, 48)


@pytest.fixture(scope="session")
def k2_point():
    # oscillatory k=2 mode below the first cot pole of h(.;2); kernel is exactly {2}
    return one_mode_point(2.0, -12.0, 2.8)


@pytest.fixture(scope="session")
def point_4_7():
    alpha, a = find_alpha_two_modes(4.0, 7.0, strategy="below")
    lam = choose_lambda(alpha, a)
    return FlowParams(solve_mu(a, alpha, lam), alpha, lam)


@pytest.fixture(scope="session")
def point_1_5():
    lam = math.pi / 2 + 0.01
    alpha, a = find_alpha_two_modes(1.0, 5.0, lam=lam, strategy="inside")
    return FlowParams(solve_mu(a, alpha, lam), alpha, lam)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
