"""Steepest descent engine for L/L-natural-convex minimization on the integer lattice.

Points are plain tuples of ints. Objectives map a tuple to an int/float or
``math.inf`` for points outside the effective domain. The descent repeatedly
asks a local oracle for the best direction in {0,+1}^V (L-convex) or
{0,-1}^V u {0,+1}^V (L-natural-convex), takes a unit or long step, and stops
at the first iteration with no improvement, which is globally optimal.
"""

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .errors import (
    CapacityError,
    ContractError,
    DivergenceError,
    InfeasibleStartError,
    UnboundedDirectionError,
)

INF = math.inf

# Magnitude cap on iterate entries: keeps sums of n entries well inside exact
# integer range even after repeated long steps.
MAGNITUDE_CAP = 2 ** 40

# Fallback per-coordinate value range used to size the iteration safety cap
# when the caller gives no better hint.
DEFAULT_RANGE_HINT = 1024


class Neighborhood(Enum):
    PLUS = "plus"            # {0, +1}^V, for L-convex objectives
    PLUS_MINUS = "plus_minus"  # {0, -1}^V u {0, +1}^V, for L-natural-convex


def linf_pm_norm(p):
    """Return (plus, minus, total): largest positive part, largest negative
    part, and their sum (the signed-infinity norm)."""
    if len(p) < 1:
        raise ContractError("norm of an empty vector")
    plus = max(max(0, x) for x in p)
    minus = max(max(0, -x) for x in p)
    return plus, minus, plus + minus


def linf_norm(p):
    return max(abs(x) for x in p) if p else 0


def round_scalar_ties_down(x):
    """Nearest integer with exact halves rounded toward -infinity."""
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return math.ceil(x - Fraction(1, 2))
    return math.ceil(x - 0.5)


def round_ties_down(q):
    """Round each coordinate to the nearest integer, halves down."""
    out = []
    for x in q:
        r = round_scalar_ties_down(x)
        if abs(r) > MAGNITUDE_CAP:
            raise OverflowError(f"rounded entry {r} exceeds magnitude cap")
        out.append(r)
    return tuple(out)


def vec_add(p, d):
    return tuple(a + b for a, b in zip(p, d))


def vec_sub(p, q):
    return tuple(a - b for a, b in zip(p, q))


def vec_scale(d, k):
    return tuple(k * x for x in d)


class Objective:
    """Callable wrapper around g: Z^V -> R u {+inf} with its convexity class.

    ``kind`` is "l" (L-convex, neighborhood {0,+1}^V) or "lnat"
    (L-natural-convex, both signs). Evaluation must be pure; the wrapper
    counts calls for diagnostics.
    """

    def __init__(self, fn, n, kind="lnat"):
        if kind not in ("l", "lnat"):
            raise ContractError(f"unknown convexity class {kind!r}")
        self.fn = fn
        self.n = n
        self.kind = kind
        self.evals = 0

    def __call__(self, p):
        self.evals += 1
        return self.fn(p)

    @property
    def neighborhood(self):
        return Neighborhood.PLUS if self.kind == "l" else Neighborhood.PLUS_MINUS


@dataclass
class IterationRecord:
    support: tuple      # sorted coordinate indices of the direction
    sign: int           # +1 / -1, 0 for the terminal no-improvement check
    step: int           # step length taken (0 at termination)
    value: float        # objective value after the update


@dataclass
class DescentTrace:
    iterations: int = 0
    records: list = field(default_factory=list)
    local_calls: int = 0
    oracle_calls: int = 0   # problem-specific counter (e.g. independence tests)
    wall_us: int = 0


def long_step_length(g, p, d, cap=MAGNITUDE_CAP):
    """Largest lambda such that g(p + lambda*d) decreases at the initial slope.

    Doubles then binary-searches on the discrete slope; raises
    UnboundedDirectionError if the slope is still linear past ``cap``.
    """
    v0 = g(p)
    delta = g(vec_add(p, d)) - v0
    if not delta < 0:
        raise ContractError("long step requires a strictly improving direction")

    def linear(k):
        return g(vec_add(p, vec_scale(d, k))) - v0 == k * delta

    lo, hi = 1, 2
    while True:
        probe = min(hi, cap + 1)
        if not linear(probe):
            hi = probe
            break
        if probe == cap + 1:
            raise UnboundedDirectionError(
                f"slope along {d} stays linear beyond cap {cap}")
        lo, hi = probe, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if linear(mid):
            lo = mid
        else:
            hi = mid
    return lo


def brute_force_local_oracle(g, p, mode):
    """Exact neighborhood argmin by enumerating all 2^n supports per sign.

    Ties broken by lexicographically smallest support, then + before -.
    Returns (direction, g(p + direction)).
    """
    n = len(p)
    if n > 22:
        raise CapacityError(f"brute-force local oracle limited to n <= 22, got {n}")
    signs = (1,) if mode is Neighborhood.PLUS else (1, -1)
    best_key = None
    best = None
    for mask in range(1 << n):
        support = tuple(i for i in range(n) if mask >> i & 1)
        for sign in signs:
            if not support and sign != signs[0]:
                continue  # the zero direction is sign-free
            d = tuple(sign if i in support else 0 for i in range(n))
            val = g(vec_add(p, d))
            key = (val, support, 0 if sign > 0 else 1)
            if best_key is None or key < best_key:
                best_key, best = key, (d, val)
    return best


def steepest_descent(g, p0, local_oracle=None, step_rule="long",
                     max_iter=None, step_cap=MAGNITUDE_CAP):
    """Run the descent from p0 and return (final point, trace).

    ``local_oracle(g, p, mode) -> (d, g(p+d))`` must solve the neighborhood
    argmin exactly for g's declared class. ``step_rule`` is "long" or "unit".
    The iteration count includes the terminal zero-improvement check, so a
    start at an optimum costs exactly one iteration.
    """
    if step_rule not in ("long", "unit"):
        raise ContractError(f"unknown step rule {step_rule!r}")
    if local_oracle is None:
        local_oracle = brute_force_local_oracle
    p0 = tuple(p0)
    value = g(p0)
    if value == INF:
        raise InfeasibleStartError("g(p0) is infinite")
    if max_iter is None:
        max_iter = 10 * g.n * DEFAULT_RANGE_HINT

    t0 = time.perf_counter_ns()
    trace = DescentTrace()
    p = p0
    while True:
        trace.iterations += 1
        trace.local_calls += 1
        if trace.iterations > max_iter:
            raise DivergenceError(
                f"no convergence within {max_iter} iterations; oracle broken?")
        d, v_next = local_oracle(g, p, g.neighborhood)
        if v_next >= value:
            trace.records.append(IterationRecord((), 0, 0, value))
            break
        lam = 1 if step_rule == "unit" else long_step_length(g, p, d, cap=step_cap)
        p = vec_add(p, vec_scale(d, lam))
        if any(abs(x) > MAGNITUDE_CAP for x in p):
            raise DivergenceError("iterate escaped the magnitude cap")
        value = g(p)
        support = tuple(i for i, x in enumerate(d) if x != 0)
        sign = 1 if any(x > 0 for x in d) else -1
        trace.records.append(IterationRecord(support, sign, lam, value))
    trace.wall_us = (time.perf_counter_ns() - t0) // 1000
    return p, trace


def lexicographic_minimizer(g, system, capacity=10 ** 7):
    """Exhaustive argmin of g over a bounded constraint system, breaking ties
    by the lexicographically smallest point. Used as the canonical learning
    target and as the test comparator."""
    lo, hi = system.finite_box()
    total = 1
    for a, b in zip(lo, hi):
        total *= b - a + 1
        if total > capacity:
            raise CapacityError(f"domain larger than {capacity} points")
    best_val, best_p = INF, None
    p = list(lo)
    n = system.n
    while True:
        pt = tuple(p)
        if system.contains(pt):
            v = g(pt)
            if v < best_val:
                best_val, best_p = v, pt
        # advance odometer, last coordinate fastest: lexicographic order
        i = n - 1
        while i >= 0:
            p[i] += 1
            if p[i] <= hi[i]:
                break
            p[i] = lo[i]
            i -= 1
        if i < 0:
            break
    if best_p is None:
        raise InfeasibleStartError("objective has no finite value on the domain")
    return best_p, best_val
