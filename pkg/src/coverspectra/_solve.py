"""Scalar root finding and minimisation helpers shared by the analytic modules."""

import math

from .errors import BracketFailure, NoConvergence

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def fsum_array(a) -> float:
    """Correctly rounded sum of an array up to terms below ``1e-30`` of the
    largest, which fsum would otherwise carry as slow extra partials."""
    mag = abs(a)
    top = mag.max() if len(a) else 0.0
    return math.fsum(a[mag >= top * 1e-30].tolist())


def logsumexp(values):
    """Stable ``log(sum(exp(v)))`` for a short sequence of floats."""
    top = max(values)
    if top == -math.inf:
        return -math.inf
    if top == math.inf:
        return math.inf
    return top + math.log(math.fsum(math.exp(v - top) for v in values))


def expand_bracket(f, lo, hi, *, max_expansions=200):
    """Grow ``[lo, hi]`` geometrically until a decreasing ``f`` changes sign.

    Returns ``(lo, hi, f(lo), f(hi))`` with ``f(lo) >= 0 >= f(hi)``.
    """
    flo, fhi = f(lo), f(hi)
    width = max(hi - lo, 1.0)
    for _ in range(max_expansions):
        if flo >= 0.0 and fhi <= 0.0:
            return lo, hi, flo, fhi
        if flo < 0.0:
            lo -= width
            flo = f(lo)
        if fhi > 0.0:
            hi += width
            fhi = f(hi)
        width *= 2.0
    raise BracketFailure("no sign change found while expanding bracket",
                         lo=lo, hi=hi, f_lo=flo, f_hi=fhi)


def solve_decreasing(f, lo, hi, *, fprime=None, xtol=1e-13, max_halvings=200,
                     expand=True):
    """Root of a continuous, strictly decreasing function.

    Bisection on a sign-change bracket; when ``fprime`` is given a Newton step
    is taken whenever it lands strictly inside the current bracket, which
    keeps the unconditional safety of bisection.  Every bisection step counts
    towards ``max_halvings``.
    """
    if expand:
        lo, hi, flo, fhi = expand_bracket(f, lo, hi)
    else:
        flo, fhi = f(lo), f(hi)
        if not (flo >= 0.0 >= fhi):
            raise BracketFailure("bracket does not enclose a root",
                                 lo=lo, hi=hi, f_lo=flo, f_hi=fhi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi

    x = 0.5 * (lo + hi)
    halvings = newton_steps = 0
    while True:
        fx = f(x)
        if fx == 0.0:
            return x
        if fx > 0.0:
            lo = x
        else:
            hi = x
        if hi - lo <= xtol * max(1.0, abs(x)):
            break
        step = None
        if fprime is not None:
            d = fprime(x)
            if d < 0.0 and math.isfinite(d):
                cand = x - fx / d
                if lo < cand < hi and newton_steps < 100:
                    newton_steps += 1
                    step = cand
                    # a tiny Newton correction means we are done
                    if abs(cand - x) <= 0.25 * xtol * max(1.0, abs(x)):
                        return cand
        if step is None:
            halvings += 1
            if halvings > max_halvings:
                raise NoConvergence("root finder exceeded halving cap",
                                    lo=lo, hi=hi, halvings=halvings)
            step = 0.5 * (lo + hi)
            if step in (lo, hi):
                break
        x = step
    return 0.5 * (lo + hi)


def solve_increasing(f, lo, hi, **kwargs):
    """Root of a strictly increasing function (sign-flipped :func:`solve_decreasing`)."""
    fprime = kwargs.pop("fprime", None)
    neg_prime = (lambda x: -fprime(x)) if fprime is not None else None
    return solve_decreasing(lambda x: -f(x), lo, hi, fprime=neg_prime, **kwargs)


def golden_section(f, lo, hi, *, xtol=1e-10, max_iter=300):
    """Minimise a unimodal function on ``[lo, hi]``.

    Returns the final bracket ``(a, b)``; ties move towards the smaller end.
    """
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= xtol * max(1.0, abs(a), abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return a, b
