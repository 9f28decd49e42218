import math

import numpy as np
import pytest

from coverspectra import _solve
from coverspectra.errors import BracketFailure, CoverSpectraError, InputError, NumericalError


def test_solve_decreasing_with_and_without_derivative():
    f = lambda x: 2.0 - math.exp(x)
    for fprime in (None, lambda x: -math.exp(x)):
        assert _solve.solve_decreasing(f, 0.0, 3.0, fprime=fprime) == pytest.approx(
            math.log(2), abs=1e-13)


def test_bracket_expansion():
    root = _solve.solve_decreasing(lambda x: 50.0 - x, 0.0, 1.0)
    assert root == pytest.approx(50.0, abs=1e-10)


def test_bracket_failure():
    with pytest.raises(BracketFailure):
        _solve.solve_decreasing(lambda x: 1.0 + 0 * x, 0.0, 1.0, expand=False)


def test_solve_increasing():
    assert _solve.solve_increasing(lambda x: x ** 3 - 8.0, 0.0, 5.0) == pytest.approx(2.0, abs=1e-12)


def test_golden_section():
    a, b = _solve.golden_section(lambda x: (x - 0.3) ** 2, 0.0, 1.0, xtol=1e-10)
    assert abs(0.5 * (a + b) - 0.3) < 1e-9


def test_logsumexp_and_fsum_array():
    assert _solve.logsumexp([0.0, 0.0]) == pytest.approx(math.log(2), abs=1e-15)
    assert _solve.logsumexp([-math.inf, -math.inf]) == -math.inf
    a = np.array([1e16, 1.0, -1e16, 1e-40])
    assert _solve.fsum_array(a) == 1.0


def test_error_payloads():
    err = NumericalError("stalled", iterations=3)
    assert err.to_dict() == {"error": "NumericalError", "message": "stalled", "iterations": 3}
    assert isinstance(InputError("x"), ValueError)
    assert isinstance(err, ArithmeticError) and isinstance(err, CoverSpectraError)
