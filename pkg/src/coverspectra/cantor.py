"""Random Cantor subsets of the covering set at desk scale.

A constructor function assigns to every finite word ``i`` a target length
``n(i)``.  The orbit positions ``P(n)`` form an arithmetic progression with
step ``n`` starting at ``M_n = min ell^{-1}(n)``, so the windows read there
are disjoint and independent.  Generation ``k`` keeps the windows at
``P(n(i))`` that extend a surviving word ``i`` of generation ``k - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _solve
from .errors import GammaTooLarge, Infeasible, TableTooSmall, TruncatedOrbit
from .ifs import IfsSpec, OrbitSample, TargetSchedule, Word, sample_orbit, word_weights
from .pressure import critical_alphas, spectrum_s
from .probpressure import log_hit, type_class_table

SEARCH_CAP = 4096


@dataclass(frozen=True)
class PositionSet:
    """``P(n) = {start, start + n, ..., start + (count - 1) n}``."""

    n: int
    start: int
    count: int

    def positions(self) -> range:
        return range(self.start, self.start + self.count * self.n, self.n)

    @property
    def last(self) -> int:
        return self.start + (self.count - 1) * self.n


def position_set(schedule: TargetSchedule, gamma: float, n: int) -> PositionSet:
    """``P(n)`` with ``q`` maximal subject to ``q <= 2 e^{gamma n} / n`` and
    every position inside the level set ``ell^{-1}(n)``."""
    lo, hi = schedule.level_set(n)
    by_level = (hi - lo) // n + 1 if hi >= lo else 0
    log_cap = math.log(2.0) + gamma * n - math.log(n)
    by_gamma = math.floor(math.exp(log_cap)) if log_cap < 40 else by_level
    return PositionSet(n, lo, max(0, min(by_gamma, by_level)))


def m_bounds(gamma: float, n: int) -> tuple[float, float]:
    """``(e^{gamma n} / (2n), 2 e^{gamma n} / n)``, the admissible range of ``#P(n)``."""
    e = math.exp(gamma * n)
    return e / (2 * n), 2 * e / n


def admissible(schedule: TargetSchedule, gamma: float, n: int) -> bool:
    q = position_set(schedule, gamma, n).count
    lo, hi = m_bounds(gamma, n)
    return q >= 1 and lo <= q <= hi


@dataclass(frozen=True)
class ConstructorEntry:
    word: Word
    n: int
    m: int
    s: float
    positions: PositionSet = field(repr=False)


@dataclass(frozen=True, eq=False)
class ConstructorTable:
    spec: IfsSpec = field(repr=False)
    gamma: float
    alpha: float
    n_min: int
    entries: dict  # Word -> ConstructorEntry, length-lexicographic insertion order

    @property
    def n0(self) -> int:
        return self.entries[Word()].n

    def __getitem__(self, word) -> ConstructorEntry:
        key = word if isinstance(word, Word) else Word(tuple(word))
        try:
            return self.entries[key]
        except KeyError:
            raise TableTooSmall(f"word {key} has no constructor entry; raise max_words",
                                word=list(key.digits)) from None

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries.values())


def _words_length_lex(n_maps: int):
    """``(), (1,), ..., (N,), (1,1), ...`` forever."""
    length = 0
    while True:
        for code in range(n_maps ** length):
            digits = []
            c = code
            for _ in range(length):
                c, r = divmod(c, n_maps)
                digits.append(r + 1)
            yield Word(tuple(reversed(digits)))
        length += 1


def check_gamma(spec: IfsSpec, gamma: float, alpha: float) -> None:
    ca = critical_alphas(spec)
    if not 0.0 < gamma < alpha:
        raise GammaTooLarge(f"need 0 < gamma < alpha, got gamma={gamma!r}, alpha={alpha!r}",
                            gamma=gamma, alpha=alpha)
    # gamma < -sum lambda^{P_gamma(1)} p e^gamma ln p  is the same as gamma < alpha0
    if not gamma < ca.alpha0:
        raise GammaTooLarge(f"gamma={gamma!r} must lie below alpha0={ca.alpha0!r}",
                            gamma=gamma, alpha0=ca.alpha0)


def default_gamma(spec: IfsSpec, alpha: float) -> float:
    return 0.8 * min(alpha, critical_alphas(spec).alpha0)


def build_constructor(spec: IfsSpec, gamma: float, alpha: float, n_min: int = 2,
                      max_words: int = 15) -> ConstructorTable:
    """Greedy constructor function on the first ``max_words`` words.

    Each word gets the smallest admissible ``n`` beyond its predecessor's
    with ``n / (p_i e^{gamma |i|}) > 2`` and ``|i| n(()) <= n``.
    """
    if n_min < 2:
        raise ValueError("n_min must be at least 2")
    check_gamma(spec, gamma, alpha)
    sched = TargetSchedule(float(alpha))
    entries = {}
    prev = n_min - 1
    n0 = None
    words = _words_length_lex(spec.n_maps)
    for _ in range(max_words):
        w = next(words)
        _, p_w = word_weights(spec, w)
        floor_c4 = 2.0 * p_w * math.exp(gamma * len(w))
        n = prev + 1
        if n0 is not None:
            n = max(n, len(w) * n0)
        for _ in range(SEARCH_CAP):
            if n > floor_c4 and admissible(sched, gamma, n):
                break
            n += 1
        else:
            raise Infeasible(f"no admissible n for word {w} below {n}",
                             word=list(w.digits), gamma=gamma, alpha=alpha)
        if n0 is None:
            n0 = n
        ps = position_set(sched, gamma, n)
        s = branch_exponent(spec, w, n, ps.count)
        entries[w] = ConstructorEntry(w, n, ps.count, s, ps)
        prev = n
    return ConstructorTable(spec, float(gamma), float(alpha), n_min, entries)


def branch_exponent(spec: IfsSpec, i_word, n_i: int, m_i: int) -> float:
    """Root ``s`` of ``sum_a lambda_a^s (1 - (1 - p_i p_a)^m) = 1`` over
    suffixes ``a`` of length ``n_i - |i|``.  May be negative for small ``m``."""
    w = i_word if isinstance(i_word, Word) else Word(tuple(i_word))
    length = n_i - len(w)
    if length < 1:
        raise ValueError(f"n_i={n_i} must exceed the word length {len(w)}")
    if m_i < 1:
        raise ValueError("m_i must be at least 1")
    _, p_w = word_weights(spec, w)
    table = type_class_table(spec.n_maps, length)
    ll, lp = table.projections(spec)
    base = table.log_multiplicity + log_hit(lp + math.log(p_w), math.log(m_i))

    def f(s):
        t = base + s * ll
        top = float(t.max())
        return top + math.log(_solve.fsum_array(np.exp(t - top)))

    def fprime(s):
        t = base + s * ll
        e = np.exp(t - t.max())
        return _solve.fsum_array(e * ll) / _solve.fsum_array(e)

    return _solve.solve_decreasing(f, -5.0, spec.s0 + 5.0, fprime=fprime, xtol=1e-14)


@dataclass(frozen=True)
class EntryCheck:
    word: Word
    c4: bool
    c5: bool
    m_bounds: bool
    spectral_gap: float   # s(gamma) - s_i
    sum_value: float      # sum_j lambda_j^{s_i} p_j e^gamma
    sum_lower: float
    sum_upper: float

    def sum_ok(self, slack: float = 1e-9) -> bool:
        return self.sum_lower - slack <= self.sum_value <= self.sum_upper + slack


def check_table(table: ConstructorTable) -> list[EntryCheck]:
    """Per-entry diagnostics for the constructor conditions and exponent bounds."""
    spec, gamma = table.spec, table.gamma
    s_gamma = spectrum_s(spec, gamma)
    n0 = table.n0
    out = []
    for e in table:
        _, p_w = word_weights(spec, e.word)
        k = len(e.word)
        lo, hi = m_bounds(gamma, e.n)
        value = math.fsum(lam ** e.s * p * math.exp(gamma)
                          for lam, p in zip(spec.lambdas, spec.probs))
        base = e.n / (p_w * math.exp(gamma * k))
        power = 1.0 / (e.n - k)
        out.append(EntryCheck(
            e.word,
            base > 2.0,
            k * n0 <= e.n and n0 >= 2,
            lo <= e.m <= hi,
            s_gamma - e.s,
            value,
            base ** power,
            (5.0 * base) ** power,
        ))
    return out


# -- generations ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GenerationSets:
    levels: list            # levels[k] is the set C_k as a sorted list of Words
    parents: dict           # word -> parent word
    seed: Optional[int]
    table: ConstructorTable = field(repr=False)

    def __len__(self):
        return len(self.levels) - 1


def required_length(table: ConstructorTable, words) -> int:
    return max(table[w].positions.last + table[w].n for w in words)


def grow_generations(orbit: OrbitSample, table: ConstructorTable,
                     schedule: Optional[TargetSchedule] = None,
                     levels: int = 2) -> GenerationSets:
    """Realise ``C_1, ..., C_levels`` from the orbit.

    ``schedule`` only serves as a consistency check on ``alpha``; positions
    come from the table.
    """
    if schedule is not None and not math.isclose(schedule.alpha, table.alpha):
        raise ValueError("schedule and constructor table use different alpha")
    digits = orbit.digits
    gens = [[Word()]]
    parents = {}
    for _ in range(levels):
        nxt = set()
        for parent in gens[-1]:
            e = table[parent]
            need = e.positions.last + e.n
            if need > len(digits):
                raise TruncatedOrbit(
                    f"positions up to {need} needed, orbit has {len(digits)}",
                    missing=[len(digits), need])
            k = len(parent)
            for p in e.positions.positions():
                window = tuple(int(d) for d in digits[p:p + e.n])
                if window[:k] == parent.digits:
                    w = Word(window)
                    nxt.add(w)
                    parents[w] = parent
        gens.append(sorted(nxt, key=Word.sort_key))
        if not nxt:
            # extinction: every later generation is empty as well
            gens.extend([] for _ in range(levels - len(gens) + 1))
            break
    return GenerationSets(gens, parents, orbit.seed, table)


@dataclass(frozen=True)
class MartingaleStats:
    mean_X1: float
    var_X1: float
    stderr: float
    seeds: int
    samples: tuple = field(default=(), repr=False)


def first_generation_mass(spec: IfsSpec, table: ConstructorTable, seed: int) -> float:
    """``X^(1) = sum over distinct windows w read at P(n(())) of lambda_w^{s_()}``."""
    root = table[Word()]
    orbit = sample_orbit(spec, root.positions.last + root.n, seed)
    seen = {tuple(orbit.digits[p:p + root.n].tolist()) for p in root.positions.positions()}
    a = spec.log_lambdas
    return math.fsum(math.exp(root.s * math.fsum(a[d - 1] for d in w)) for w in seen)


def martingale_stats(spec: IfsSpec, table: ConstructorTable,
                     schedule: Optional[TargetSchedule] = None, seeds: int = 500,
                     seed0: int = 0) -> MartingaleStats:
    """Monte Carlo mean, variance and standard error of ``X^(1)``; the exact
    mean is one by the choice of ``s_()``."""
    if seeds < 30:
        raise ValueError("at least 30 seeds are needed")
    x = np.array([first_generation_mass(spec, table, seed0 + r) for r in range(seeds)])
    var = float(x.var(ddof=1))
    return MartingaleStats(float(x.mean()), var, math.sqrt(var / seeds), seeds, tuple(x.tolist()))


def expected_first_generation_size(spec: IfsSpec, table: ConstructorTable) -> float:
    """``E #C_1 = sum_{|j| = n(())} (1 - (1 - p_j)^m)``."""
    root = table[Word()]
    t = type_class_table(spec.n_maps, root.n)
    _, lp = t.projections(spec)
    terms = t.log_multiplicity + log_hit(lp, math.log(root.m))
    return _solve.fsum_array(np.exp(terms))
