"""Monte Carlo realisation of the dynamical covering process.

Targets are the windows ``(sigma^n o)|_{ell(n)}``, i.e. digits
``o_{n+1} ... o_{n+ell(n)}``.  The union of the cylinders they name, over a
tail ``tail_start <= n <= horizon``, is stored in a :class:`CoverTrie`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import _solve
from .errors import DepthTooLarge, TruncatedOrbit, WeightError
from .ifs import IfsSpec, TargetSchedule, digit_stream
from .pressure import critical_alphas

MAX_DEPTH = 60
BITMAP_LIMIT = 1 << 24
CHUNK = 10_000_000


class _Node:
    __slots__ = ("full", "children")

    def __init__(self):
        self.full = False
        self.children = {}


class CoverTrie:
    """Union of cylinders as a pruned ``N``-ary tree.

    A node is *full* when its whole cylinder is covered.  Marking a node
    discards its subtree, and a node whose ``N`` children are all full is
    marked itself, so the full nodes always form a prefix-free set.
    """

    def __init__(self, n_maps: int, max_depth: int = MAX_DEPTH):
        if max_depth > MAX_DEPTH:
            raise DepthTooLarge(f"trie depth {max_depth} exceeds {MAX_DEPTH}")
        self.n_maps = n_maps
        self.max_depth = max_depth
        self.root = _Node()

    def insert(self, word: Sequence[int]) -> bool:
        """Mark the cylinder ``[word]``; returns False if it was already covered."""
        word = tuple(word)
        if len(word) > self.max_depth:
            raise DepthTooLarge(f"word of length {len(word)} beyond trie depth {self.max_depth}")
        path = [self.root]
        node = self.root
        for d in word:
            if node.full:
                return False
            if not 1 <= d <= self.n_maps:
                raise ValueError(f"digit {d} outside 1..{self.n_maps}")
            child = node.children.get(d)
            if child is None:
                child = node.children[d] = _Node()
            node = child
            path.append(node)
        if node.full:
            return False
        node.full = True
        node.children = {}
        # compaction towards the root
        for parent in reversed(path[:-1]):
            if len(parent.children) == self.n_maps and all(c.full for c in parent.children.values()):
                parent.full = True
                parent.children = {}
            else:
                break
        return True

    def insert_codes(self, codes: np.ndarray, length: int) -> None:
        """Insert many words of one length given as base-``N`` integer codes.

        Complete sibling groups are merged before touching the tree, so a
        nearly full level costs far fewer node operations.
        """
        for level, group in _compact_codes(np.unique(codes), length, self.n_maps):
            for code in group.tolist():
                self.insert(decode(code, level, self.n_maps))

    def covered(self, word: Sequence[int]) -> bool:
        node = self.root
        for d in word:
            if node.full:
                return True
            node = node.children.get(d)
            if node is None:
                return False
        return node.full

    def marked(self) -> list[tuple[int, ...]]:
        """The prefix-free set of full nodes, in length-lexicographic order."""
        out = []
        stack = [((), self.root)]
        while stack:
            word, node = stack.pop()
            if node.full:
                out.append(word)
                continue
            for d, child in node.children.items():
                stack.append((word + (d,), child))
        return sorted(out, key=lambda w: (len(w), w))

    def covered_count(self, depth: int) -> int:
        """Number of depth-``depth`` cylinders that are fully covered (exact)."""
        n = self.n_maps
        return sum(n ** (depth - len(w)) for w in self.marked() if len(w) <= depth)

    def uncovered_terms(self, depth: int, log_lambdas: Sequence[float]) -> list[tuple[float, int]]:
        """Uncovered depth-``depth`` cylinders as ``(ln lambda_u, r)`` blocks.

        Each block stands for every extension of ``u`` by ``r`` more digits.
        """
        terms = []
        stack = [(0, 0.0, self.root)]
        while stack:
            level, ll, node = stack.pop()
            if node.full:
                continue
            if level == depth:
                terms.append((ll, 0))
                continue
            for d in range(1, self.n_maps + 1):
                child = node.children.get(d)
                cl = ll + log_lambdas[d - 1]
                if child is None:
                    terms.append((cl, depth - level - 1))
                else:
                    stack.append((level + 1, cl, child))
        return terms

    def __eq__(self, other):
        return isinstance(other, CoverTrie) and self.marked() == other.marked()


def decode(code: int, length: int, n_maps: int) -> tuple[int, ...]:
    digits = [0] * length
    for j in range(length - 1, -1, -1):
        code, r = divmod(code, n_maps)
        digits[j] = r + 1
    return tuple(digits)


def encode(word: Sequence[int], n_maps: int) -> int:
    code = 0
    for d in word:
        code = code * n_maps + (d - 1)
    return code


def _compact_codes(codes, length, n_maps):
    out = []
    while length > 0 and len(codes) >= n_maps:
        parents = codes // n_maps
        up, cnt = np.unique(parents, return_counts=True)
        full = up[cnt == n_maps]
        if not len(full):
            break
        out.append((length, codes[~np.isin(parents, full)]))
        codes, length = full, length - 1
    out.append((length, codes))
    return out


def _check_weights(weights, n_maps):
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n_maps,) or np.any(w < 0.0) or abs(math.fsum(w) - 1.0) > 1e-12:
        raise WeightError(f"weights {list(w)!r} are not a probability vector on {n_maps} symbols")
    return w


def covered_measure(trie: CoverTrie, weights) -> float:
    """Bernoulli mass of the covered region under ``weights``."""
    w = _check_weights(weights, trie.n_maps)
    logw = np.log(w, where=w > 0, out=np.full_like(w, -np.inf))
    total = math.fsum(math.exp(math.fsum(logw[d - 1] for d in word)) for word in trie.marked())
    return min(total, 1.0)


def complement_exponent(trie: CoverTrie, spec: IfsSpec, depth: int) -> Optional[float]:
    """Root ``t`` of ``sum lambda_j^t = 1`` over uncovered depth-``depth`` words.

    A finite-scale proxy for the dimension of the uncovered set; ``None``
    when every depth-``depth`` cylinder is covered.
    """
    terms = trie.uncovered_terms(depth, spec.log_lambdas)
    if not terms:
        return None
    a = spec.log_lambdas

    def f(t):
        log_s = _solve.logsumexp([t * x for x in a])
        return _solve.logsumexp([t * ll + r * log_s for ll, r in terms])

    return _solve.solve_decreasing(f, 0.0, spec.s0 + 1.0, xtol=1e-14)


# -- window codes ----------------------------------------------------------------

def window_codes(digits: np.ndarray, length: int, n_maps: int) -> np.ndarray:
    """Base-``N`` codes of every window of ``length`` digits (1-based digits).

    Codes of length ``2^j`` are built by doubling and then combined along
    the binary expansion of ``length``.
    """
    count = len(digits) - length + 1
    if count <= 0:
        return np.empty(0, dtype=np.int64)
    size = n_maps ** length
    # narrow integers keep the passes memory-bound rather than copy-bound
    dtype = np.uint16 if size <= 1 << 16 else np.uint32 if size <= 1 << 32 else np.int64
    d = digits.astype(dtype)
    d -= 1
    powers = {1: d}
    p = 1
    while 2 * p <= length:
        c = powers[p]
        nxt = c[:-p] * dtype(n_maps ** p)
        nxt += c[p:]
        powers[2 * p] = nxt
        p *= 2
    out = None
    offset = 0
    while p >= 1:
        if length - offset >= p:
            block = powers[p][offset:offset + count]
            if out is None:
                out = block.copy()
            else:
                out *= dtype(n_maps ** p)
                out += block
            offset += p
        p //= 2
    return out


class _LevelCollector:
    """Distinct window codes seen at one target length."""

    def __init__(self, length, n_maps):
        self.length = length
        self.size = n_maps ** length
        self.bitmap = np.zeros(self.size, dtype=bool) if self.size <= BITMAP_LIMIT else None
        self.parts = []

    def add(self, codes):
        if self.bitmap is not None:
            self.bitmap[codes] = True
        else:
            self.parts.append(np.unique(codes))

    def distinct(self):
        if self.bitmap is not None:
            return np.flatnonzero(self.bitmap)
        if not self.parts:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(self.parts))


# -- reports ---------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageReport:
    spec: IfsSpec = field(repr=False)
    alpha: float
    horizon: int
    depth: int
    tail_start: int
    covered_count: int
    total: int
    coverage_fraction: float
    covered_measure: dict
    complement_exponent: Optional[float]
    seed: Optional[int]
    n_targets: int = 0

    @property
    def full_cover(self) -> bool:
        return self.covered_count == self.total


def coverage_report(trie: CoverTrie, spec: IfsSpec, *, alpha, horizon, depth,
                    tail_start, seed=None, n_targets=0) -> CoverageReport:
    count = trie.covered_count(depth)
    total = spec.n_maps ** depth
    measures = {"P_p": covered_measure(trie, spec.probs),
                "Q0": covered_measure(trie, _normalise(spec.q0_weights))}
    t = complement_exponent(trie, spec, depth) if count < total else None
    return CoverageReport(spec, float(alpha), int(horizon), int(depth), int(tail_start),
                          count, total, count / total, measures, t, seed, n_targets)


def _normalise(w):
    s = math.fsum(w)
    return tuple(x / s for x in w)


def targets_from_orbit(digits: Sequence[int], ell: Callable[[int], int] | Sequence[int],
                       tail_start: int, horizon: int) -> Iterable[tuple[int, ...]]:
    """Windows ``o_{n+1} .. o_{n+ell(n)}`` for ``tail_start <= n <= horizon``.

    ``ell`` is a callable or a sequence with ``ell[n-1] = ell(n)``.
    """
    get = ell if callable(ell) else (lambda n: ell[n - 1])
    digits = list(digits)
    for n in range(tail_start, horizon + 1):
        k = get(n)
        if n + k > len(digits):
            raise TruncatedOrbit(f"target at n={n} needs {n + k} digits, orbit has {len(digits)}",
                                 n=n, needed=n + k, available=len(digits))
        yield tuple(digits[n:n + k])


def cover_from_orbit(spec: IfsSpec, digits: Sequence[int], ell, *, depth: int,
                     tail_start: int = 1, horizon: Optional[int] = None,
                     alpha: float = math.nan) -> tuple[CoverTrie, CoverageReport]:
    """Cover from an explicit orbit and target-length rule (small inputs)."""
    if horizon is None:
        horizon = len(digits) if callable(ell) else len(ell)
    targets = list(targets_from_orbit(digits, ell, tail_start, horizon))
    top = max([depth] + [len(t) for t in targets])
    trie = CoverTrie(spec.n_maps, max_depth=top)
    for t in targets:
        trie.insert(t)
    report = coverage_report(trie, spec, alpha=alpha, horizon=horizon, depth=depth,
                             tail_start=tail_start, n_targets=len(targets))
    return trie, report


def _check_depths(spec, depth, top_level):
    if depth < 1:
        raise ValueError("depth must be at least 1")
    worst = max(depth, top_level)
    if worst > MAX_DEPTH or spec.n_maps ** worst >= 2**62:
        raise DepthTooLarge(f"target length {worst} too deep for {spec.n_maps} symbols",
                            depth=depth, max_target_length=top_level)


def run_cover(spec: IfsSpec, alpha: float, horizon: int, depth: int,
              tail_start: Optional[int] = None, seed: int = 0, *,
              chunk: int = CHUNK) -> CoverageReport:
    """Sample an orbit and cover with every target ``tail_start <= n <= horizon``.

    The orbit (length ``horizon + ell(horizon)``) is streamed in chunks, so
    memory does not grow with the horizon.  ``tail_start`` defaults to
    ``horizon // 2``.
    """
    trie, report = _run_cover(spec, alpha, horizon, depth, tail_start, seed, chunk)
    return report


def run_cover_trie(spec, alpha, horizon, depth, tail_start=None, seed=0, *, chunk=CHUNK):
    return _run_cover(spec, alpha, horizon, depth, tail_start, seed, chunk)


def _run_cover(spec, alpha, horizon, depth, tail_start, seed, chunk):
    sched = TargetSchedule(float(alpha), int(horizon))
    if tail_start is None:
        tail_start = max(1, horizon // 2)
    if not 1 <= tail_start <= horizon:
        raise ValueError(f"tail_start={tail_start} outside [1, {horizon}]")
    top = sched.max_level
    _check_depths(spec, depth, top)
    n_maps = spec.n_maps
    first_level = sched.ell(tail_start)
    levels = {k: _LevelCollector(k, n_maps) for k in range(first_level, top + 1)}
    spans = {k: (max(tail_start, sched.lower(k)), min(horizon, sched.upper(k)))
             for k in levels}

    total = horizon + top
    carry = np.empty(0, dtype=np.uint8)
    goff = 0
    for block in digit_stream(spec, seed, total, chunk):
        buf = np.concatenate([carry, block]) if len(carry) else block
        end = goff + len(buf)
        n_hi = horizon if end == total else min(horizon, end - top)
        if n_hi < goff:
            carry = buf
            continue
        for k, (lo, hi) in spans.items():
            a, b = max(lo, goff), min(hi, n_hi)
            if a > b:
                continue
            seg = buf[a - goff:b - goff + k]
            levels[k].add(window_codes(seg, k, n_maps))
        carry = buf[n_hi + 1 - goff:]
        goff = n_hi + 1

    trie = CoverTrie(n_maps, max_depth=max(depth, top))
    for k in sorted(levels):
        trie.insert_codes(levels[k].distinct(), k)
    report = coverage_report(trie, spec, alpha=alpha, horizon=horizon, depth=depth,
                             tail_start=tail_start, seed=seed,
                             n_targets=horizon - tail_start + 1)
    return trie, report


# -- threshold experiments ---------------------------------------------------------

@dataclass(frozen=True)
class HorizonRule:
    """How the horizon and tail start depend on ``alpha`` and the depth.

    ``single``: horizon ``ceil(e^{alpha (depth + 1)})``, tail from ``horizon // 2``.
    ``levels``: the targets are exactly the level sets of lengths
    ``depth + 1 .. depth + extra_levels``.
    ``fixed``: explicit ``horizon`` and ``tail_start``.
    """

    kind: str = "single"
    extra_levels: int = 6
    horizon: Optional[int] = None
    tail_start: Optional[int] = None

    def resolve(self, alpha: float, depth: int) -> tuple[int, int]:
        if self.kind == "single":
            h = math.ceil(math.exp(alpha * (depth + 1)))
            return h, max(1, h // 2)
        if self.kind == "levels":
            sched = TargetSchedule(float(alpha))
            return sched.upper(depth + self.extra_levels), sched.upper(depth) + 1
        if self.kind == "fixed":
            h = int(self.horizon)
            return h, int(self.tail_start or max(1, h // 2))
        raise ValueError(f"unknown horizon rule {self.kind!r}")


@dataclass(frozen=True)
class ThresholdRow:
    alpha: float
    horizon: int
    tail_start: int
    replicas: int
    mean_coverage: float
    min_coverage: float
    mean_q0_measure: float
    full_cover_freq: float
    alpha0: float
    alpha1: float
    alpha2: float
    reports: tuple = field(default=(), repr=False, compare=False)


def threshold_experiment(spec: IfsSpec, alpha_grid: Sequence[float], replicas: int,
                         horizon_rule: HorizonRule = HorizonRule(), depth: int = 6,
                         seed0: int = 0, threads: int = 1) -> list[ThresholdRow]:
    """Coverage statistics over ``replicas`` seeds ``seed0 + r`` per grid point."""
    grid = [float(a) for a in alpha_grid]
    if grid != sorted(grid):
        raise ValueError("alpha grid must be sorted ascending")
    ca = critical_alphas(spec)
    jobs = [(a, r) for a in grid for r in range(replicas)]

    def one(job):
        a, r = job
        h, t0 = horizon_rule.resolve(a, depth)
        return run_cover(spec, a, h, depth, t0, seed0 + r)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]
    rows = []
    for i, a in enumerate(grid):
        reps = results[i * replicas:(i + 1) * replicas]
        cov = [r.coverage_fraction for r in reps]
        rows.append(ThresholdRow(
            a, reps[0].horizon, reps[0].tail_start, replicas,
            float(np.mean(cov)), float(min(cov)),
            float(np.mean([r.covered_measure["Q0"] for r in reps])),
            sum(r.full_cover for r in reps) / replicas,
            ca.alpha0, ca.alpha1, ca.alpha2, tuple(reps)))
    return rows
