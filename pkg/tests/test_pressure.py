import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coverspectra import (Regime, Side, classify_regime, critical_alphas, pressure_root,
                          pressure_second_derivative, spectrum_point, spectrum_s, spectrum_t,
                          validate_ifs, variational_optimum)
from coverspectra._solve import golden_section
from coverspectra.errors import AlphaNonPositive, Infeasible
from coverspectra.pressure import (alpha0_residual, entropy_ratio, pressure_infimum,
                                   transition_diagnostic)

from _helpers import random_spec

specs = st.builds(
    lambda lams, raw: validate_ifs(lams, [r / sum(raw) for r in raw[:-1]]
                                   + [1 - sum(r / sum(raw) for r in raw[:-1])]),
    st.lists(st.floats(0.05, 0.9), min_size=3, max_size=3),
    st.lists(st.floats(0.05, 1.0), min_size=3, max_size=3),
)


def P(spec, alpha, q):
    return pressure_root(spec, alpha, q).value


def test_q_zero_gives_hutchinson(skew_ifs):
    for alpha in (0.1, 0.9, 2.5):
        assert P(skew_ifs, alpha, 0.0) == pytest.approx(skew_ifs.s0, abs=1e-13)


def test_homogeneous_value(equal_ratio_ifs):
    assert P(equal_ratio_ifs, 0.3, 1.0) == pytest.approx(0.3 / -math.log(0.4), abs=1e-12)
    assert P(equal_ratio_ifs, 0.3, 1.0) == pytest.approx(0.327406, abs=2e-6)


def test_q_independent_when_p_e_alpha_is_one(fair_ifs):
    for q in (-3.0, 0.5, 3.0):
        r = pressure_root(fair_ifs, math.log(2), q)
        assert r.value == pytest.approx(0.791002, abs=1e-6)
        assert abs(r.derivative) < 1e-12


def test_root_residual(skew_ifs):
    r = pressure_root(skew_ifs, 1.0, 0.7)
    total = math.fsum(l ** r.value * (p * math.e) ** 0.7
                      for l, p in zip(skew_ifs.lambdas, skew_ifs.probs))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_derivative_matches_finite_difference(skew_ifs):
    h = 1e-5
    for q in (-2.0, -0.3, 0.4, 1.0, 2.5):
        fd = (P(skew_ifs, 1.0, q + h) - P(skew_ifs, 1.0, q - h)) / (2 * h)
        assert pressure_root(skew_ifs, 1.0, q).derivative == pytest.approx(fd, abs=1e-8)


def test_second_derivative_affine_case_vanishes():
    spec = validate_ifs([0.4, 0.4], [0.5, 0.5])
    for q in (-1.0, 0.0, 2.0):
        assert abs(pressure_second_derivative(spec, 0.8, q)) < 1e-12


def test_second_derivative_positive(skew_ifs):
    h = 1e-4
    d2 = pressure_second_derivative(skew_ifs, 1.0, 0.5)
    fd = (P(skew_ifs, 1.0, 0.5 + h) - 2 * P(skew_ifs, 1.0, 0.5) + P(skew_ifs, 1.0, 0.5 - h)) / h**2
    assert d2 > 0
    assert d2 == pytest.approx(fd, abs=1e-5)


def test_second_derivative_five_point_grid(rng):
    for _ in range(10):
        spec = random_spec(rng)
        alpha = float(rng.uniform(0.2, 2.0))
        h = 1e-3
        for q in np.linspace(-1.5, 1.5, 5):
            fd = (-P(spec, alpha, q + 2 * h) + 16 * P(spec, alpha, q + h)
                  - 30 * P(spec, alpha, q) + 16 * P(spec, alpha, q - h)
                  - P(spec, alpha, q - 2 * h)) / (12 * h * h)
            assert pressure_second_derivative(spec, alpha, q) == pytest.approx(fd, abs=1e-5)


@given(specs, st.floats(0.1, 3.0))
@settings(max_examples=40, deadline=None)
def test_pressure_convex_in_q(spec, alpha):
    qs = np.linspace(-3, 3, 41)
    vals = np.array([P(spec, alpha, q) for q in qs])
    assert np.min(vals[2:] - 2 * vals[1:-1] + vals[:-2]) >= -1e-9


def test_critical_alphas_skewed(skew_ifs):
    ca = critical_alphas(skew_ifs)
    assert ca.alpha2 == pytest.approx(-math.log(0.2), abs=1e-12)
    assert ca.alpha1 == pytest.approx(1.38513, abs=2e-5)
    assert ca.alpha0 == pytest.approx(0.759745, abs=1e-6)
    assert not ca.degenerate
    assert alpha0_residual(skew_ifs, ca.alpha0) < 1e-13


def test_critical_alphas_degenerate(fair_ifs):
    ca = critical_alphas(fair_ifs)
    assert ca.degenerate
    assert ca.alpha0 == ca.alpha1 == ca.alpha2 == pytest.approx(math.log(2), abs=1e-15)


def test_critical_alphas_homogeneous(equal_ratio_ifs):
    ca = critical_alphas(equal_ratio_ifs)
    entropy = -(0.2 * math.log(0.2) + 0.8 * math.log(0.8))
    assert ca.alpha0 == pytest.approx(entropy, abs=1e-10)
    assert ca.alpha0 == pytest.approx(0.500402, abs=1e-6)
    assert ca.alpha1 == pytest.approx(0.916291, abs=1e-6)
    assert ca.alpha2 == pytest.approx(1.609438, abs=1e-6)


@given(specs)
@settings(max_examples=40, deadline=None)
def test_critical_alphas_ordered(spec):
    ca = critical_alphas(spec)
    assert 0 < ca.alpha0 <= ca.alpha1 + 1e-12 <= ca.alpha2 + 2e-12


def test_spectrum_s_examples(skew_ifs, equal_ratio_ifs):
    assert spectrum_s(equal_ratio_ifs, 0.3) == pytest.approx(0.327406, abs=2e-6)
    ca = critical_alphas(skew_ifs)
    assert spectrum_s(skew_ifs, ca.alpha0) == pytest.approx(0.445581, abs=2e-4)
    for alpha in (ca.alpha1, 1.5, 3.0):
        assert spectrum_s(skew_ifs, alpha) == skew_ifs.s0


def test_spectrum_s_matches_golden_section_oracle(rng):
    """Interior branch against a derivative-free minimisation on [0, 1]."""
    for _ in range(20):
        spec = random_spec(rng)
        ca = critical_alphas(spec)
        if ca.alpha1 - ca.alpha0 < 1e-3:
            continue
        alpha = float(rng.uniform(ca.alpha0, ca.alpha1))
        a, b = golden_section(lambda q: P(spec, alpha, q), 0.0, 1.0, xtol=1e-10)
        oracle = P(spec, alpha, 0.5 * (a + b))
        assert spectrum_s(spec, alpha) == pytest.approx(oracle, abs=1e-12)


def test_spectrum_s_is_continuous_and_monotone(skew_ifs):
    grid = np.linspace(0.01, 2.0, 400)
    vals = np.array([spectrum_s(skew_ifs, a) for a in grid])
    assert np.all(np.diff(vals) >= -1e-12)
    assert np.max(np.abs(np.diff(vals))) < 0.01


def test_spectrum_t_examples(skew_ifs):
    assert spectrum_t(skew_ifs, 0.5) == skew_ifs.s0
    t = spectrum_t(skew_ifs, 1.5)
    assert t < skew_ifs.s0
    value, q = pressure_infimum(skew_ifs, 1.5)
    assert q < 0 and t == pytest.approx(value, abs=1e-13)
    # independent check: coarse grid minimum over q < 0
    grid_min = min(P(skew_ifs, 1.5, q) for q in np.linspace(-20, 0, 4001))
    assert t <= grid_min + 1e-12 and t >= grid_min - 1e-4
    assert spectrum_t(skew_ifs, 2.0) is None


def test_spectrum_t_at_alpha2_is_the_limit(skew_ifs):
    ca = critical_alphas(skew_ifs)
    assert spectrum_t(skew_ifs, ca.alpha2) == 0.0
    near = spectrum_t(skew_ifs, ca.alpha2 - 1e-6)
    assert 0.0 <= near < 1e-3


def test_alpha_must_be_positive(skew_ifs):
    with pytest.raises(AlphaNonPositive):
        spectrum_s(skew_ifs, 0.0)
    with pytest.raises(AlphaNonPositive):
        classify_regime(skew_ifs, -1.0)


@pytest.mark.parametrize("alpha, regime", [
    (0.5, Regime.PRESSURE), (1.0, Regime.SPECTRAL),
    (1.5, Regime.MEASURE_FULL), (2.0, Regime.FULL_COVER),
])
def test_classify_skewed(skew_ifs, alpha, regime):
    assert classify_regime(skew_ifs, alpha).regime is regime


def test_classify_boundaries(skew_ifs, fair_ifs):
    ca = critical_alphas(skew_ifs)
    info = classify_regime(skew_ifs, ca.alpha1)
    assert info.regime is Regime.SPECTRAL and info.boundary
    info = classify_regime(skew_ifs, ca.alpha2)
    assert info.regime is Regime.MEASURE_FULL and info.boundary
    assert classify_regime(fair_ifs, 1.0).regime is Regime.FULL_COVER
    assert classify_regime(fair_ifs, 0.5).regime is Regime.PRESSURE


def test_variational_at_alpha1(skew_ifs):
    ca = critical_alphas(skew_ifs)
    for side in Side:
        r = variational_optimum(skew_ifs, ca.alpha1, side)
        assert r.value == pytest.approx(skew_ifs.s0, abs=1e-10)
        assert np.allclose(r.weights, skew_ifs.q0_weights, atol=1e-9)
        assert abs(r.constraint) < 1e-9


def _projected_gradient_oracle(spec, alpha):
    """Maximise the entropy ratio on the 1-simplex {(w, 1 - w)} under the
    upper constraint by a dense scan followed by ternary refinement."""
    l1, l2 = spec.log_lambdas
    p1, p2 = spec.log_probs

    def ratio(w):
        if not (w * p1 + (1 - w) * p2 + alpha >= 0):
            return -math.inf
        return entropy_ratio((w, 1 - w), spec.lambdas)

    grid = np.linspace(1e-9, 1 - 1e-9, 20001)
    vals = [ratio(w) for w in grid]
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    for _ in range(200):
        m1, m2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        if ratio(m1) < ratio(m2):
            lo = m1
        else:
            hi = m2
    return ratio(0.5 * (lo + hi))


def test_variational_matches_simplex_scan(skew_ifs):
    r = variational_optimum(skew_ifs, 1.0, Side.UPPER)
    assert r.value == pytest.approx(entropy_ratio(r.weights, skew_ifs.lambdas), abs=1e-10)
    assert r.value == pytest.approx(spectrum_s(skew_ifs, 1.0), abs=1e-7)
    assert r.value == pytest.approx(_projected_gradient_oracle(skew_ifs, 1.0), abs=1e-7)


def test_variational_uniform_probs(fair_ifs):
    r = variational_optimum(fair_ifs, 1.0, Side.UPPER)
    assert r.value == pytest.approx(fair_ifs.s0, abs=1e-12)


def test_variational_infeasible_side(skew_ifs):
    with pytest.raises(Infeasible):
        variational_optimum(skew_ifs, 0.1, Side.UPPER)   # below -ln p_max
    with pytest.raises(Infeasible):
        variational_optimum(skew_ifs, 2.0, Side.LOWER)   # above -ln p_min


def test_variational_window_edge(skew_ifs):
    r = variational_optimum(skew_ifs, -math.log(0.8), Side.UPPER)
    assert math.isinf(r.q_star) or r.q_star > 10
    assert r.value == pytest.approx(0.0, abs=1e-6)


def test_spectrum_point(skew_ifs):
    pt = spectrum_point(skew_ifs, 1.0)
    assert pt.regime is Regime.SPECTRAL and not pt.boundary
    assert 0 < pt.q_star < 1
    assert sum(pt.optimizer_weights) == pytest.approx(1.0, abs=1e-12)
    pt = spectrum_point(skew_ifs, 2.0)
    assert pt.t_alpha is None and pt.q_star is None


def test_transition_order(skew_ifs, equal_ratio_ifs, fair_ifs):
    assert transition_diagnostic(skew_ifs).order == 2
    assert transition_diagnostic(equal_ratio_ifs).order == 2
    d = transition_diagnostic(fair_ifs)
    assert d.order == 1 and d.right_slope == 0.0 and d.left_slope > 0
