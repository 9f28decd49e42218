"""Finite-``n`` probabilistic pressure

    L_n(s) = (1/n) ln sum_{|j| = n} lambda_j^s (1 - (1 - p_j)^m)

and its root ``s_n``.  Since ``lambda_j`` and ``p_j`` depend only on how many
times each digit occurs, the sum runs over type classes with multinomial
multiplicities rather than over all ``N^n`` words.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln

from . import _solve
from .errors import DegenerateM, NumericalError, TableOverflow, TooLarge
from .ifs import IfsSpec, TargetSchedule
from .pressure import spectrum_s

CLASS_CAP = 10**8
ENUMERATION_CAP = 2 * 10**7


class Method(str, enum.Enum):
    AGGREGATED = "Aggregated"
    ENUMERATED = "Enumerated"


@dataclass(frozen=True)
class TypeClass:
    counts: tuple[int, ...]
    n: int
    log_multiplicity: float
    log_lambda: float
    log_p: float


@dataclass(frozen=True, eq=False)
class TypeClassTable:
    """All digit-count vectors ``k`` with ``sum k = n`` and their log-multinomials."""

    n_maps: int
    n: int
    counts: np.ndarray          # (K, N) int64
    log_multiplicity: np.ndarray  # (K,)

    def __len__(self):
        return len(self.log_multiplicity)

    def classes(self, spec: IfsSpec):
        ll, lp = self.projections(spec)
        for k, lm, a, b in zip(self.counts, self.log_multiplicity, ll, lp):
            yield TypeClass(tuple(int(x) for x in k), self.n, float(lm), float(a), float(b))

    def projections(self, spec: IfsSpec) -> tuple[np.ndarray, np.ndarray]:
        """Per-class ``(ln lambda_j, ln p_j)``."""
        c = self.counts.astype(np.float64)
        return c @ np.asarray(spec.log_lambdas), c @ np.asarray(spec.log_probs)


def _compositions(n: int, parts: int) -> np.ndarray:
    if parts == 1:
        return np.array([[n]], dtype=np.int64)
    blocks = []
    for first in range(n + 1):
        rest = _compositions(n - first, parts - 1)
        blocks.append(np.hstack([np.full((len(rest), 1), first, dtype=np.int64), rest]))
    return np.vstack(blocks)


@lru_cache(maxsize=64)
def type_class_table(n_maps: int, n: int) -> TypeClassTable:
    size = math.comb(n + n_maps - 1, n_maps - 1)
    if size > CLASS_CAP:
        raise TableOverflow(f"{size} type classes exceed the cap {CLASS_CAP}",
                            n=n, n_maps=n_maps, classes=size)
    counts = _compositions(n, n_maps)
    log_mult = gammaln(n + 1.0) - gammaln(counts + 1.0).sum(axis=1)
    counts.setflags(write=False)
    log_mult.setflags(write=False)
    return TypeClassTable(n_maps, n, counts, log_mult)


def log_hit(log_p, log_m: float):
    """``ln(1 - (1 - p)^m)`` from ``ln p`` and ``ln m``, stable for tiny ``p``
    and for astronomically large ``m``."""
    log_p = np.asarray(log_p, dtype=np.float64)
    p = np.exp(log_p)
    # x = m * (-ln(1 - p)) kept in log space; -ln(1 - p) == p below e^-40
    with np.errstate(divide="ignore"):
        lx = np.where(log_p < -40.0, log_p, np.log(-np.log1p(-p)))
    u = log_m + lx
    x = np.exp(np.minimum(u, 700.0))
    with np.errstate(divide="ignore"):   # the small branch replaces log(0)
        out = np.log(-np.expm1(-x))
    small = u < -36.0   # 1 - e^-x == x to double precision
    return np.where(small, u, out)


@dataclass(frozen=True)
class LnEvaluation:
    n: int
    s: float
    m_n: int
    value: float
    method: Method
    degenerate: bool = False


def _log_m(m_n) -> float:
    return math.log(m_n) if m_n > 0 else -math.inf


class _AggregatedTerms:
    """``ln`` of the per-class terms with the ``s``-independent part frozen."""

    def __init__(self, spec: IfsSpec, n: int, log_m: float):
        table = type_class_table(spec.n_maps, n)
        ll, lp = table.projections(spec)
        self.n = n
        self.log_lambda = ll
        self.base = table.log_multiplicity + log_hit(lp, log_m)

    def value(self, s: float) -> float:
        t = self.base + s * self.log_lambda
        top = float(t.max())
        return (top + math.log(_solve.fsum_array(np.exp(t - top)))) / self.n

    def derivative(self, s: float) -> float:
        t = self.base + s * self.log_lambda
        w = np.exp(t - t.max())
        return _solve.fsum_array(w * self.log_lambda) / _solve.fsum_array(w) / self.n


def ln_aggregated(spec: IfsSpec, s: float, n: int, m_n: int) -> LnEvaluation:
    """``L_n(s)`` summed over type classes."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if m_n < 0:
        raise ValueError("m_n must be non-negative")
    if m_n == 0:
        return LnEvaluation(n, float(s), 0, -math.inf, Method.AGGREGATED, True)
    value = _AggregatedTerms(spec, n, _log_m(m_n)).value(float(s))
    return LnEvaluation(n, float(s), int(m_n), value, Method.AGGREGATED)


def ln_bruteforce(spec: IfsSpec, s: float, n: int, m_n: int) -> LnEvaluation:
    """``L_n(s)`` by enumerating every word of length ``n`` (the oracle)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if spec.n_maps ** n > ENUMERATION_CAP:
        raise TooLarge(f"{spec.n_maps}^{n} words exceed {ENUMERATION_CAP}",
                       n=n, n_maps=spec.n_maps)
    if m_n == 0:
        return LnEvaluation(n, float(s), 0, -math.inf, Method.ENUMERATED, True)
    ll = np.zeros(1)
    lp = np.zeros(1)
    for _ in range(n):
        ll = (ll[:, None] + np.asarray(spec.log_lambdas)[None, :]).ravel()
        lp = (lp[:, None] + np.asarray(spec.log_probs)[None, :]).ravel()
    t = s * ll + log_hit(lp, _log_m(m_n))
    top = float(t.max())
    value = (top + math.log(_solve.fsum_array(np.exp(t - top)))) / n
    return LnEvaluation(n, float(s), int(m_n), value, Method.ENUMERATED)


def root_from_log_m(spec: IfsSpec, n: int, log_m: float, alpha: float = 0.0) -> float:
    """Root of ``s -> L_n(s)`` for a multiplicity given through ``ln m``."""
    if not log_m >= 0.0:
        raise DegenerateM(f"m({n}) = 0: the level set is shorter than {n}", n=n)
    terms = _AggregatedTerms(spec, n, log_m)
    # sum_j (1 - (1 - p_j)^m) >= sum_j p_j = 1 whenever m >= 1
    if terms.value(0.0) < -1e-12:
        raise NumericalError(f"L_{n}(0) = {terms.value(0.0)!r} is negative", n=n)
    hi = spec.s0 + alpha / (-math.log(spec.lambda_max)) + 1.0
    return _solve.solve_decreasing(terms.value, 0.0, hi, fprime=terms.derivative,
                                   xtol=1e-14)


def probabilistic_root(spec: IfsSpec, alpha: float, n: int) -> float:
    """``s_n`` with ``L_n(s_n) = 0`` and ``m = m(n)`` from the canonical schedule."""
    sched = TargetSchedule(float(alpha))
    return root_from_log_m(spec, n, sched.log_m(n), alpha)


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    log_m: float
    s_n: Optional[float]
    s_alpha: float
    gap: Optional[float]
    s_n_exp: float   # root with e^{alpha n} in place of m(n)

    @property
    def m(self) -> float:
        return math.exp(self.log_m) if self.log_m > -math.inf else 0.0


def convergence_report(spec: IfsSpec, alpha: float, n_list: Sequence[int]) -> list[ConvergenceRow]:
    """``s_n`` against ``s(alpha)`` for each ``n``; rows with ``m(n) = 0`` keep
    ``s_n = None``."""
    sched = TargetSchedule(float(alpha))
    target = spectrum_s(spec, alpha)
    rows = []
    for n in sorted(set(int(x) for x in n_list)):
        log_m = sched.log_m(n)
        s_exp = root_from_log_m(spec, n, alpha * n, alpha)
        if log_m >= 0.0:
            s_n = root_from_log_m(spec, n, log_m, alpha)
            rows.append(ConvergenceRow(n, log_m, s_n, target, abs(s_n - target), s_exp))
        else:
            rows.append(ConvergenceRow(n, log_m, None, target, None, s_exp))
    return rows
