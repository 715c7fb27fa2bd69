from functools import lru_cache

import pytest

from cmlift.quadform import TernaryForm, theta_series

# filled by test_acceptance, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


@lru_cache(maxsize=None)
def cached_theta(coeffs: tuple, C: int):
    return theta_series(TernaryForm.from_coeffs(coeffs), C)


@pytest.fixture
def theta_of():
    return cached_theta


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
