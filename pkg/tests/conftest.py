import numpy as np
import pytest

from coverspectra import validate_ifs

SKEW = ((0.8, 0.1), (0.2, 0.8))
EQUAL_RATIO = ((0.4, 0.4), (0.2, 0.8))
FAIR = ((0.8, 0.1), (0.5, 0.5))


@pytest.fixture
def skew_ifs():
    return validate_ifs(*SKEW)


@pytest.fixture
def equal_ratio_ifs():
    return validate_ifs(*EQUAL_RATIO)


@pytest.fixture
def fair_ifs():
    return validate_ifs(*FAIR)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one acceptance line; all lines are repeated in the terminal summary."""
    def emit(number, ok, detail, seconds):
        line = f"[criterion {number:>2}] {'PASS' if ok else 'FAIL'}  {detail}  ({seconds:.3f} s)"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
