"""Problem instances: IFS parameters, finite words, target schedules and orbits.

Only the symbolic data of the iterated function system is modelled: the
contraction ratios ``lambdas`` and the Bernoulli probabilities ``probs``.
Digits of words and orbits are 1-based, ``1..N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterator, Sequence

import numpy as np

from . import _solve
from .errors import (AlphaNonPositive, DigitOutOfRange, HorizonZero,
                     LengthMismatch, ProbOutOfRange, ProbSumError,
                     RatioOutOfRange, WordTooLong)

PROB_SUM_TOL = 1e-12
MAX_WORD_LENGTH = 10**6


@dataclass(frozen=True)
class IfsSpec:
    """Contraction ratios and Bernoulli weights of an IFS on ``N >= 2`` maps.

    Construct through :func:`validate_ifs`; the constructor itself performs
    the same checks.
    """

    lambdas: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        lambdas = tuple(float(x) for x in self.lambdas)
        probs = tuple(float(x) for x in self.probs)
        if len(lambdas) != len(probs):
            raise LengthMismatch(
                f"{len(lambdas)} contraction ratios but {len(probs)} probabilities",
                n_lambdas=len(lambdas), n_probs=len(probs))
        if len(lambdas) < 2:
            raise LengthMismatch("need at least two maps", n=len(lambdas))
        for i, lam in enumerate(lambdas):
            if not 0.0 < lam < 1.0:
                raise RatioOutOfRange(f"lambda_{i + 1} = {lam!r} not in (0, 1)",
                                      index=i + 1, value=lam)
        for i, p in enumerate(probs):
            if not 0.0 < p < 1.0:
                raise ProbOutOfRange(f"p_{i + 1} = {p!r} not in (0, 1)",
                                     index=i + 1, value=p)
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ProbSumError(f"probabilities sum to {total!r}", total=total)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "probs", probs)

    @property
    def n_maps(self) -> int:
        return len(self.lambdas)

    @property
    def lambda_max(self) -> float:
        return max(self.lambdas)

    @property
    def lambda_min(self) -> float:
        return min(self.lambdas)

    @property
    def p_max(self) -> float:
        return max(self.probs)

    @property
    def p_min(self) -> float:
        return min(self.probs)

    @cached_property
    def log_lambdas(self) -> tuple[float, ...]:
        return tuple(math.log(x) for x in self.lambdas)

    @cached_property
    def log_probs(self) -> tuple[float, ...]:
        return tuple(math.log(x) for x in self.probs)

    @cached_property
    def s0(self) -> float:
        return similarity_dimension(self)

    @cached_property
    def q0_weights(self) -> tuple[float, ...]:
        """The natural (dimension maximising) weights ``lambda_i ** s0``."""
        return tuple(lam ** self.s0 for lam in self.lambdas)

    @property
    def uniform_probs(self) -> bool:
        return max(self.probs) - min(self.probs) <= 1e-15

    def to_dict(self) -> dict:
        return {"lambdas": list(self.lambdas), "probs": list(self.probs)}


def validate_ifs(lambdas: Sequence[float], probs: Sequence[float]) -> IfsSpec:
    """Build a validated :class:`IfsSpec`; probabilities are never renormalised."""
    return IfsSpec(tuple(lambdas), tuple(probs))


def similarity_dimension(spec: IfsSpec) -> float:
    """The unique ``s0`` with ``sum(lambda_i ** s0) == 1``."""
    logs = spec.log_lambdas

    def f(s):
        return _solve.logsumexp([s * a for a in logs])

    def fprime(s):
        w = [math.exp(s * a) for a in logs]
        return math.fsum(wi * a for wi, a in zip(w, logs)) / math.fsum(w)

    # f(0) = log N > 0 and f(1) < 0 because every ratio is below one
    return _solve.solve_decreasing(f, 0.0, 1.0, fprime=fprime, xtol=1e-15)


# -- words ---------------------------------------------------------------------

@dataclass(frozen=True, order=False)
class Word:
    """A finite word over ``{1, ..., N}``; the empty word is allowed."""

    digits: tuple[int, ...] = ()

    def __post_init__(self):
        digits = tuple(int(d) for d in self.digits)
        if len(digits) > MAX_WORD_LENGTH:
            raise WordTooLong(f"word length {len(digits)} exceeds {MAX_WORD_LENGTH}")
        object.__setattr__(self, "digits", digits)

    def __len__(self):
        return len(self.digits)

    def __iter__(self):
        return iter(self.digits)

    def __add__(self, other):
        return Word(self.digits + tuple(other))

    def __str__(self):
        return "".join(map(str, self.digits)) if self.digits else "()"

    def is_prefix_of(self, other) -> bool:
        other = tuple(other)
        return other[: len(self.digits)] == self.digits

    def restrict(self, n: int) -> "Word":
        """The first ``n`` digits."""
        return Word(self.digits[:n])

    def shift(self, k: int = 1) -> "Word":
        """Drop the first ``k`` digits (the left shift on a finite window)."""
        return Word(self.digits[k:])

    def check(self, n_maps: int) -> "Word":
        for d in self.digits:
            if not 1 <= d <= n_maps:
                raise DigitOutOfRange(f"digit {d} outside 1..{n_maps}", digit=d)
        return self

    def sort_key(self):
        """Length-lexicographic order key."""
        return (len(self.digits), self.digits)


def all_words(n_maps: int, length: int) -> Iterator[Word]:
    """Words of the given length in alphabetic order."""
    if length == 0:
        yield Word()
        return
    for code in range(n_maps ** length):
        digits = []
        for _ in range(length):
            code, r = divmod(code, n_maps)
            digits.append(r + 1)
        yield Word(tuple(reversed(digits)))


def word_weights(spec: IfsSpec, w) -> tuple[float, float]:
    """``(lambda_w, p_w)``: products of ratios and probabilities along ``w``."""
    w = w if isinstance(w, Word) else Word(tuple(w))
    w.check(spec.n_maps)
    log_lam = math.fsum(spec.log_lambdas[d - 1] for d in w.digits)
    log_p = math.fsum(spec.log_probs[d - 1] for d in w.digits)
    return math.exp(log_lam), math.exp(log_p)


# -- target schedule -----------------------------------------------------------

# beyond this the float predicate can no longer separate neighbouring integers
_EXACT_LIMIT = 2.0**50


def _canonical_ell(alpha: float, n: int) -> int:
    if n <= 1:
        return 1
    return max(1, math.ceil(math.log(n) / alpha))


@lru_cache(maxsize=65536)
def _level_upper(alpha: float, k: int) -> int:
    """``max {n : ell(n) <= k}`` for the canonical rule."""
    if k <= 0:
        return 0
    guess = math.exp(alpha * k)
    if guess >= _EXACT_LIMIT:
        return math.floor(guess)
    c = math.floor(guess)
    while _canonical_ell(alpha, c + 1) <= k:
        c += 1
    while c > 1 and _canonical_ell(alpha, c) > k:
        c -= 1
    return c


@dataclass(frozen=True)
class TargetSchedule:
    """The canonical target-length rule ``ell(n) = max(1, ceil(ln n / alpha))``.

    Level sets ``ell^{-1}(k)`` are integer intervals ``[lower(k), upper(k)]``
    and ``m(k) = floor(#ell^{-1}(k) / k)``.
    """

    alpha: float
    n_max: int = 1

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise AlphaNonPositive(f"alpha must be positive, got {self.alpha!r}")
        if self.n_max < 1:
            raise HorizonZero("n_max must be at least 1")

    @property
    def max_level(self) -> int:
        """The target length at ``n_max``."""
        return self.ell(self.n_max)

    def ell(self, n: int) -> int:
        if n < 1:
            raise ValueError("ell is defined for n >= 1")
        return _canonical_ell(self.alpha, n)

    def ell_array(self, ns) -> np.ndarray:
        """Vectorised ``ell`` consistent with the integer level boundaries."""
        ns = np.asarray(ns, dtype=np.int64)
        top = self.ell(int(ns.max())) if ns.size else 1
        bounds = np.array([_level_upper(self.alpha, k) for k in range(top + 1)],
                          dtype=np.int64)
        return np.searchsorted(bounds, ns, side="left").astype(np.int64)

    def upper(self, k: int) -> int:
        return _level_upper(self.alpha, k)

    def lower(self, k: int) -> int:
        return _level_upper(self.alpha, k - 1) + 1

    def level_set(self, k: int) -> tuple[int, int]:
        """Inclusive integer interval ``ell^{-1}(k)``; empty when ``lo > hi``."""
        return self.lower(k), self.upper(k)

    def level_size(self, k: int) -> int:
        return max(0, self.upper(k) - self.upper(k - 1))

    def m(self, k: int) -> int:
        return self.level_size(k) // k

    def log_m(self, k: int) -> float:
        """``log m(k)``; ``-inf`` when ``m(k) == 0``.

        Exact while the level boundaries are exactly representable, then the
        asymptotic ``alpha k + log(1 - e^-alpha) - log k``.
        """
        if self.alpha * (k - 1) < math.log(_EXACT_LIMIT):
            m = self.m(k)
            return math.log(m) if m > 0 else -math.inf
        return self.alpha * k + math.log1p(-math.exp(-self.alpha)) - math.log(k)

    def levels(self) -> range:
        return range(1, self.max_level + 1)


def canonical_schedule(alpha: float, n_max: int) -> TargetSchedule:
    return TargetSchedule(float(alpha), int(n_max))


# -- orbits --------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OrbitSample:
    """A finite prefix ``o_1 ... o_horizon`` of a Bernoulli orbit (1-based digits)."""

    digits: np.ndarray
    seed: int
    spec: IfsSpec = field(repr=False)

    def __len__(self):
        return len(self.digits)

    def window(self, n: int, length: int) -> Word:
        """``(sigma^n o)|_length``, i.e. digits ``o_{n+1} ... o_{n+length}``."""
        if n + length > len(self.digits):
            raise IndexError(f"window ({n}, {length}) beyond orbit of length {len(self)}")
        return Word(tuple(int(d) for d in self.digits[n:n + length]))


def make_rng(seed: int) -> np.random.Generator:
    """The counter-based generator (Philox 4x64) used for every orbit."""
    return np.random.Generator(np.random.Philox(int(seed)))


def digit_stream(spec: IfsSpec, seed: int, total: int,
                 chunk: int = 1 << 22) -> Iterator[np.ndarray]:
    """Yield successive chunks of i.i.d. digits (``uint8``, 1-based).

    The digit for a uniform ``u`` is ``1 + #{k < N-1 : u >= F_k}`` with ``F``
    the cumulative probabilities, so the stream does not depend on ``chunk``.
    """
    cdf = np.cumsum(np.asarray(spec.probs, dtype=np.float64))[:-1]
    rng = make_rng(seed)
    produced = 0
    while produced < total:
        size = min(chunk, total - produced)
        u = rng.random(size)
        d = np.ones(size, dtype=np.uint8)
        for threshold in cdf:
            d += u >= threshold
        produced += size
        yield d


def sample_orbit(spec: IfsSpec, horizon: int, seed: int) -> OrbitSample:
    if horizon < 1:
        raise HorizonZero("horizon must be at least 1", horizon=horizon)
    digits = np.concatenate(list(digit_stream(spec, seed, horizon)))
    return OrbitSample(digits, int(seed), spec)
