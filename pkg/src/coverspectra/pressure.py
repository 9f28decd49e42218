"""The pressure function ``P_alpha(q)`` and the dimension spectra built on it.

``P_alpha(q)`` is the unique root ``P`` of

    sum_i lambda_i**P * (p_i * e**alpha)**q = 1,

strictly decreasing in ``P`` and jointly smooth.  Writing ``a_i = ln lambda_i``
and ``c_i = ln p_i + alpha`` the equation reads ``LSE(P a + q c) = 0`` and with
``w_i = exp(P a_i + q c_i)``

    P'  = sum w c / (-sum w a),
    P'' = sum w (c + P' a)**2 / (-sum w a)  >= 0.

The covering spectrum ``s(alpha)`` is the infimum of ``P_alpha`` over
``q in [0, 1]``; the complement spectrum ``t(alpha)`` is the infimum over
``q < 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from . import _solve
from .errors import AlphaNonPositive, Infeasible
from .ifs import IfsSpec

# relative distance at which alpha counts as sitting on a transition point
BOUNDARY_RTOL = 1e-12
# max(p) - min(p) below which the probabilities are treated as equal
DEGENERATE_TOL = 1e-14


@dataclass(frozen=True)
class PressureValue:
    alpha: float
    q: float
    value: float
    derivative: float
    residual: float


def _terms(spec: IfsSpec, alpha: float, q: float, P: float):
    return [P * a + q * (lp + alpha) for a, lp in zip(spec.log_lambdas, spec.log_probs)]


def _weights(spec, alpha, q, P):
    """Normalised ``w_i`` (they sum to one exactly at the root)."""
    t = _terms(spec, alpha, q, P)
    top = max(t)
    e = [math.exp(x - top) for x in t]
    z = math.fsum(e)
    return [x / z for x in e]


def _solve_P(spec: IfsSpec, alpha: float, q: float) -> float:
    a = spec.log_lambdas
    c = [lp + alpha for lp in spec.log_probs]

    def f(P):
        return _solve.logsumexp([P * ai + q * ci for ai, ci in zip(a, c)])

    def fprime(P):
        w = _weights(spec, alpha, q, P)
        return math.fsum(wi * ai for wi, ai in zip(w, a))

    return _solve.solve_decreasing(f, -5.0, spec.s0 + 5.0, fprime=fprime, xtol=1e-14)


def _derivatives(spec: IfsSpec, alpha: float, q: float, P: float):
    """``(P', P'')`` from the quotient formulas at the root ``P``."""
    w = _weights(spec, alpha, q, P)
    a = spec.log_lambdas
    c = [lp + alpha for lp in spec.log_probs]
    denom = -math.fsum(wi * ai for wi, ai in zip(w, a))
    d1 = math.fsum(wi * ci for wi, ci in zip(w, c)) / denom
    d2 = math.fsum(wi * (ci + d1 * ai) ** 2 for wi, ci, ai in zip(w, c, a)) / denom
    return d1, d2


def pressure_root(spec: IfsSpec, alpha: float, q: float) -> PressureValue:
    """Solve the pressure equation at ``(alpha, q)``."""
    alpha, q = float(alpha), float(q)
    P = _solve_P(spec, alpha, q)
    d1, _ = _derivatives(spec, alpha, q, P)
    resid = abs(math.fsum(math.exp(t) for t in _terms(spec, alpha, q, P)) - 1.0)
    return PressureValue(alpha, q, P, d1, resid)


def pressure_second_derivative(spec: IfsSpec, alpha: float, q: float) -> float:
    """``d^2 P_alpha / dq^2``; vanishes exactly when ``c_i / (-a_i)`` is constant."""
    P = _solve_P(spec, float(alpha), float(q))
    return _derivatives(spec, float(alpha), float(q), P)[1]


def _dP(spec, alpha, q):
    return _derivatives(spec, alpha, q, _solve_P(spec, alpha, q))


# -- critical values -----------------------------------------------------------

@dataclass(frozen=True)
class CriticalAlphas:
    alpha0: float
    alpha1: float
    alpha2: float
    degenerate: bool


def _is_degenerate(spec: IfsSpec) -> bool:
    return spec.p_max - spec.p_min <= DEGENERATE_TOL


def critical_alphas(spec: IfsSpec) -> CriticalAlphas:
    """Transition points ``alpha0 <= alpha1 <= alpha2``.

    ``alpha2 = -ln p_min``, ``alpha1 = -sum lambda^s0 ln p`` and ``alpha0`` is
    the root of ``g(alpha) = alpha + sum lambda^{P_alpha(1)} p e^alpha ln p``,
    the point where the minimiser of ``P_alpha`` on ``[0, 1]`` leaves ``q = 1``.
    """
    cached = spec.__dict__.get("_critical")
    if cached is not None:
        return cached
    if _is_degenerate(spec):
        v = math.log(spec.n_maps)
        out = CriticalAlphas(v, v, v, True)
    else:
        alpha2 = -math.log(spec.p_min)
        alpha1 = -math.fsum(w * lp for w, lp in zip(spec.q0_weights, spec.log_probs))

        def g(alpha):
            P = _solve_P(spec, alpha, 1.0)
            w = [math.exp(P * a + lp + alpha) for a, lp in zip(spec.log_lambdas, spec.log_probs)]
            return alpha + math.fsum(wi * lp for wi, lp in zip(w, spec.log_probs))

        # g(0) = sum p ln p < 0 and g(alpha1) >= 0
        alpha0 = _solve.solve_increasing(g, 0.0, alpha1, expand=False, xtol=1e-15)
        out = CriticalAlphas(alpha0, alpha1, alpha2, False)
    spec.__dict__["_critical"] = out
    return out


def alpha0_residual(spec: IfsSpec, alpha0: float) -> float:
    """``|g(alpha0)|`` for the defining equation of ``alpha0``."""
    P = _solve_P(spec, alpha0, 1.0)
    w = [math.exp(P * a + lp + alpha0) for a, lp in zip(spec.log_lambdas, spec.log_probs)]
    return abs(alpha0 + math.fsum(wi * lp for wi, lp in zip(w, spec.log_probs)))


# -- regimes -------------------------------------------------------------------

class Regime(str, enum.Enum):
    PRESSURE = "PressurePart"
    SPECTRAL = "SpectralPart"
    MEASURE_FULL = "MeasureFull"
    FULL_COVER = "FullCover"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class RegimeInfo:
    regime: Regime
    boundary: bool


def _near(x, y):
    return abs(x - y) <= BOUNDARY_RTOL * max(1.0, abs(y))


def _check_alpha(alpha):
    if not alpha > 0.0:
        raise AlphaNonPositive(f"alpha must be positive, got {alpha!r}", alpha=alpha)


def classify_regime(spec: IfsSpec, alpha: float) -> RegimeInfo:
    """Regime of ``alpha``; ``alpha1`` and ``alpha2`` belong to the lower regime.

    ``boundary`` is set when ``alpha`` is within ``BOUNDARY_RTOL`` of ``alpha1``
    or ``alpha2``, where the regime is not settled.
    """
    _check_alpha(alpha)
    ca = critical_alphas(spec)
    on_edge = _near(alpha, ca.alpha1) or _near(alpha, ca.alpha2)
    if ca.degenerate:
        regime = Regime.PRESSURE if alpha <= ca.alpha0 or on_edge else Regime.FULL_COVER
        return RegimeInfo(regime, on_edge)
    if alpha <= ca.alpha0:
        regime = Regime.PRESSURE
    elif _near(alpha, ca.alpha1) or alpha < ca.alpha1:
        regime = Regime.SPECTRAL
    elif _near(alpha, ca.alpha2) or alpha < ca.alpha2:
        regime = Regime.MEASURE_FULL
    else:
        regime = Regime.FULL_COVER
    return RegimeInfo(regime, on_edge)


# -- minimisation over half-lines ------------------------------------------------

def _stationary_q(spec, alpha, lo, hi):
    """Root of the increasing map ``q -> P'_alpha(q)`` inside ``[lo, hi]``."""
    return _solve.solve_increasing(
        lambda q: _dP(spec, alpha, q)[0], lo, hi,
        fprime=lambda q: _dP(spec, alpha, q)[1], expand=False, xtol=1e-14)


def _argmin_interval(spec, alpha, lo, hi):
    """Minimiser of the convex ``P_alpha`` on ``[lo, hi]`` (ends may be infinite).

    Returns ``q*`` which may be ``+-inf`` when the infimum is only approached.
    """
    if math.isfinite(lo) and math.isfinite(hi):
        d_lo, d_hi = _dP(spec, alpha, lo)[0], _dP(spec, alpha, hi)[0]
        if d_lo >= 0.0:
            return lo
        if d_hi <= 0.0:
            return hi
        return _stationary_q(spec, alpha, lo, hi)
    # half-line with one finite end
    if math.isfinite(lo):
        d = _dP(spec, alpha, lo)[0]
        if d >= 0.0:
            return lo
        step, direction = 1.0, 1.0
    else:
        d = _dP(spec, alpha, hi)[0]
        if d <= 0.0:
            return hi
        step, direction = 1.0, -1.0
    start = lo if math.isfinite(lo) else hi
    far = start + direction * step
    for _ in range(60):
        dfar = _dP(spec, alpha, far)[0]
        if (dfar >= 0.0) if direction > 0 else (dfar <= 0.0):
            a, b = sorted((start, far))
            return _stationary_q(spec, alpha, a, b)
        start = far
        step *= 2.0
        far = start + direction * step
    return direction * math.inf


def _limit_value(spec, alpha, q_sign):
    """``lim P_alpha(q)`` as ``q -> q_sign * inf`` when the extreme ``c_i`` vanish.

    Only the indices attaining ``max`` (``q_sign > 0``) or ``min`` of ``ln p``
    survive; the limit solves ``sum_{i in I} lambda_i^s = 1``.
    """
    target = spec.p_max if q_sign > 0 else spec.p_min
    idx = [i for i, p in enumerate(spec.probs) if abs(p - target) <= DEGENERATE_TOL]
    logs = [spec.log_lambdas[i] for i in idx]
    if len(logs) == 1:
        s = 0.0
    else:
        s = _solve.solve_decreasing(lambda x: _solve.logsumexp([x * a for a in logs]),
                                    0.0, 1.0)
    weights = [0.0] * spec.n_maps
    for i in idx:
        weights[i] = math.exp(s * spec.log_lambdas[i])
    return s, weights


# -- spectra -------------------------------------------------------------------

def spectrum_s(spec: IfsSpec, alpha: float) -> float:
    """``s(alpha) = inf_{0 <= q <= 1} P_alpha(q)`` by regime dispatch."""
    _check_alpha(alpha)
    ca = critical_alphas(spec)
    if ca.degenerate and alpha >= ca.alpha0:
        return spec.s0      # P_alpha(q) no longer depends on q at alpha0
    if alpha <= ca.alpha0:
        return _solve_P(spec, alpha, 1.0)
    if alpha < ca.alpha1:
        q = _argmin_interval(spec, alpha, 0.0, 1.0)
        return _solve_P(spec, alpha, q)
    return spec.s0


def spectrum_t(spec: IfsSpec, alpha: float) -> Optional[float]:
    """``t(alpha) = inf_{q < 0} P_alpha(q)``; ``None`` (absent) past ``alpha2``.

    Below ``alpha1`` the infimum is approached as ``q -> 0-`` and ``s0`` is
    returned.  At ``alpha2`` itself the infimum is the limit ``q -> -inf``.
    """
    _check_alpha(alpha)
    ca = critical_alphas(spec)
    if alpha < ca.alpha1:
        return spec.s0
    if _near(alpha, ca.alpha2):
        return _limit_value(spec, ca.alpha2, -1)[0] if not ca.degenerate else spec.s0
    if alpha > ca.alpha2:
        return None
    q = _argmin_interval(spec, alpha, -math.inf, 0.0)
    return _solve_P(spec, alpha, q)


def pressure_infimum(spec: IfsSpec, alpha: float) -> tuple[float, float]:
    """``(inf_q P_alpha(q), q*)`` over all real ``q``.

    Finite only for ``alpha`` in ``[-ln p_max, -ln p_min]``; outside it the
    infimum is ``-inf`` and :class:`Infeasible` is raised.
    """
    lo_a, hi_a = -math.log(spec.p_max), -math.log(spec.p_min)
    if alpha < lo_a - 1e-15 or alpha > hi_a + 1e-15:
        raise Infeasible(f"alpha={alpha!r} outside [{lo_a!r}, {hi_a!r}]", alpha=alpha)
    q = _argmin_interval(spec, alpha, 0.0, math.inf)
    if q == 0.0:
        q = _argmin_interval(spec, alpha, -math.inf, 0.0)
    if math.isinf(q):
        return _limit_value(spec, alpha, q)[0], q
    return _solve_P(spec, alpha, q), q


# -- variational principle -----------------------------------------------------

class Side(str, enum.Enum):
    UPPER = "UpperConstraint"   # sum w ln p + alpha >= 0, infimum over q >= 0
    LOWER = "LowerConstraint"   # sum w ln p + alpha <= 0, infimum over q <= 0


@dataclass(frozen=True)
class VariationalResult:
    value: float
    q_star: float
    weights: tuple[float, ...]
    constraint: float


def entropy_ratio(weights, lambdas) -> float:
    """``(-sum w ln w) / (-sum w ln lambda)`` with ``0 ln 0 = 0``."""
    h = -math.fsum(w * math.log(w) for w in weights if w > 0.0)
    d = -math.fsum(w * math.log(lam) for w, lam in zip(weights, lambdas) if w > 0.0)
    return h / d


def variational_optimum(spec: IfsSpec, alpha: float, side: Side) -> VariationalResult:
    """Constrained maximiser of the entropy ratio over probability vectors.

    The maximum of ``H(w) / L(w)`` subject to the side's sign condition on
    ``sum w ln p + alpha`` equals the infimum of ``P_alpha`` over the
    matching half-line of ``q``, attained at
    ``w_i = lambda_i^{P(q*)} (p_i e^alpha)^{q*}``.
    """
    side = Side(side)
    if side is Side.UPPER:
        if alpha < -math.log(spec.p_max) - 1e-15:
            raise Infeasible("no probability vector satisfies sum w ln p + alpha >= 0",
                             alpha=alpha, side=side.value)
        q = _argmin_interval(spec, alpha, 0.0, math.inf)
    else:
        if alpha > -math.log(spec.p_min) + 1e-15:
            raise Infeasible("no probability vector satisfies sum w ln p + alpha <= 0",
                             alpha=alpha, side=side.value)
        q = _argmin_interval(spec, alpha, -math.inf, 0.0)
    if math.isinf(q):
        value, w = _limit_value(spec, alpha, q)
    else:
        value = _solve_P(spec, alpha, q)
        w = _weights(spec, alpha, q, value)
    constraint = math.fsum(wi * lp for wi, lp in zip(w, spec.log_probs)) + alpha
    return VariationalResult(value, q, tuple(w), constraint)


@dataclass(frozen=True)
class TransitionDiagnostic:
    alpha0: float
    left_slope: float
    right_slope: float
    order: int      # 1 when the slope jumps, 2 otherwise (not a certificate)


def transition_diagnostic(spec: IfsSpec, h: float = 1e-6, rtol: float = 1e-3) -> TransitionDiagnostic:
    """One-sided difference quotients of ``s`` at ``alpha0``.

    The left slope is ``1 / (-sum w ln lambda)`` at ``q = 1``; on the right the
    minimiser starts at ``q = 1`` too unless the spectrum is flat past ``alpha0``.
    """
    a0 = critical_alphas(spec).alpha0
    s0 = spectrum_s(spec, a0)
    left = (s0 - spectrum_s(spec, a0 - h)) / h
    right = (spectrum_s(spec, a0 + h) - s0) / h
    order = 1 if abs(left - right) > rtol * max(abs(left), abs(right), 1e-300) else 2
    return TransitionDiagnostic(a0, left, right, order)


# -- spectrum records ------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumPoint:
    alpha: float
    s_alpha: float
    t_alpha: Optional[float]
    regime: Regime
    boundary: bool
    q_star: Optional[float] = None
    optimizer_weights: Optional[tuple[float, ...]] = None


def spectrum_point(spec: IfsSpec, alpha: float) -> SpectrumPoint:
    info = classify_regime(spec, alpha)
    s = spectrum_s(spec, alpha)
    t = spectrum_t(spec, alpha)
    q_star = weights = None
    if info.regime is Regime.SPECTRAL:
        q_star = _argmin_interval(spec, alpha, 0.0, 1.0)
        weights = tuple(_weights(spec, alpha, q_star, s))
    return SpectrumPoint(float(alpha), s, t, info.regime, info.boundary, q_star, weights)
