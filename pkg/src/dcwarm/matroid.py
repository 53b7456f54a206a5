"""Weighted matroid intersection by dual steepest descent.

The dual objective g(p) = max_{B in B1} p(B) + max_{B in B2} (w-p)(B) is
evaluated with two greedy runs. Each local step intersects the matroids of
maximum-weight bases, where every independence test is answered by a single
call to the underlying oracle via the weight-level decomposition, and the
step length comes from doubling plus binary search.
"""

import itertools
import time
from dataclasses import dataclass
from collections import deque

from .core import DescentTrace, IterationRecord, round_ties_down, vec_add
from .errors import (
    CapacityError,
    ContractError,
    DivergenceError,
    InfeasibleSystemError,
    InvariantViolationError,
    UnboundedDirectionError,
)

WEIGHT_CAP = 2 ** 31


class Matroid:
    """Independence-oracle interface; ``calls`` counts oracle invocations."""

    def __init__(self, n):
        self.n = n
        self.calls = 0
        self._rank = None

    def is_independent(self, subset):
        self.calls += 1
        return self._indep(frozenset(subset))

    def _indep(self, subset):
        raise NotImplementedError

    def indep_add(self, indep, j):
        return self.is_independent(indep | {j})

    def indep_swap(self, indep, i, j):
        return self.is_independent((indep - {i}) | {j})

    @property
    def rank(self):
        if self._rank is None:
            self._rank = len(greedy_max_weight_base(self, (0,) * self.n))
        return self._rank

    def rank_of(self, subset):
        """Rank of a subset by restricted greedy (|subset| oracle calls)."""
        current = frozenset()
        for e in sorted(subset):
            if self.indep_add(current, e):
                current |= {e}
        return len(current)


class UniformMatroid(Matroid):
    def __init__(self, n, r):
        super().__init__(n)
        self.r = r

    def _indep(self, subset):
        return len(subset) <= self.r


class PartitionMatroid(Matroid):
    """At most ``caps[b]`` elements from each block of a partition of V."""

    def __init__(self, n, blocks, caps):
        super().__init__(n)
        self.blocks = [tuple(b) for b in blocks]
        self.caps = tuple(caps)
        if len(self.blocks) != len(self.caps) or any(c < 0 for c in self.caps):
            raise ContractError("blocks/caps mismatch or negative capacity")
        self.block_of = {}
        for b, block in enumerate(self.blocks):
            for e in block:
                if e in self.block_of or not 0 <= e < n:
                    raise ContractError("blocks must partition the ground set")
                self.block_of[e] = b
        if len(self.block_of) != n:
            raise ContractError("blocks must cover the ground set")

    def _indep(self, subset):
        counts = [0] * len(self.blocks)
        for e in subset:
            b = self.block_of[e]
            counts[b] += 1
            if counts[b] > self.caps[b]:
                return False
        return True


class ExplicitBasisMatroid(Matroid):
    """Matroid given by an explicit base list; brute-force test oracle."""

    def __init__(self, n, bases):
        super().__init__(n)
        self.bases = [frozenset(b) for b in bases]
        if not self.bases:
            raise ContractError("at least one base required")

    def _indep(self, subset):
        return any(subset <= b for b in self.bases)


def greedy_max_weight_base(oracle, v):
    """Maximum-weight base: scan in non-increasing weight, ties by ascending
    index, keep every element that preserves independence."""
    order = sorted(range(oracle.n), key=lambda e: (-v[e], e))
    base = frozenset()
    for e in order:
        if oracle.indep_add(base, e):
            base |= {e}
    return base


def greedy_max_weight_value(oracle, v):
    return sum(v[e] for e in greedy_max_weight_base(oracle, v))


def mv_query(oracle, v, b_ref, indep, added, removed=None):
    """Independence of indep u {added} (minus ``removed``) in the matroid of
    v-maximum bases, using exactly one underlying oracle call.

    The weight-level decomposition reduces the test to the level of
    ``added``: probe the same-level slice of the adjusted set together with
    the reference base's strictly-higher levels.
    """
    if removed is not None and removed not in indep:
        raise ContractError("removed element not in the independent set")
    if added in indep and added != removed:
        raise ContractError("added element already present")
    t = v[added]
    probe = {e for e in indep if v[e] == t and e != removed}
    probe.add(added)
    probe |= {e for e in b_ref if v[e] >= t + 1}
    return oracle.is_independent(probe)


class MaxWeightBaseMatroid(Matroid):
    """Matroid whose bases are the v-maximum bases of ``base_oracle``.

    Add/swap queries cost one underlying call each; generic subset queries
    fall back to incremental adds and are meant for tests.
    """

    def __init__(self, base_oracle, v):
        super().__init__(base_oracle.n)
        self.base_oracle = base_oracle
        self.v = tuple(v)
        self.ref_base = greedy_max_weight_base(base_oracle, self.v)

    @property
    def calls(self):
        return self.base_oracle.calls

    @calls.setter
    def calls(self, value):  # Matroid.__init__ assigns; underlying owns the count
        pass

    def indep_add(self, indep, j):
        return mv_query(self.base_oracle, self.v, self.ref_base, indep, j)

    def indep_swap(self, indep, i, j):
        return mv_query(self.base_oracle, self.v, self.ref_base, indep, j, removed=i)

    def is_independent(self, subset):
        current = frozenset()
        for e in sorted(subset):
            if not self.indep_add(current, e):
                return False
            current |= {e}
        return True

    def _indep(self, subset):
        return self.is_independent(subset)


def cardinality_intersection(o1, o2):
    """Maximum common independent set via shortest augmenting paths in the
    exchange graph, plus the certifying partition.

    Returns (I, x_min, calls) where |I| = rank1(x_min) + rank2(V - x_min)
    (asserted) and ``calls`` counts the independence-oracle calls consumed.
    """
    if o1.n != o2.n:
        raise ContractError("oracles live on different ground sets")
    n = o1.n
    calls0 = o1.calls + o2.calls
    indep = frozenset()
    x_min = None
    while True:
        outside = [e for e in range(n) if e not in indep]
        sources = [j for j in outside if o1.indep_add(indep, j)]
        sinks = {j for j in outside if o2.indep_add(indep, j)}
        arcs = {e: [] for e in range(n)}
        for i in sorted(indep):
            for j in outside:
                if o1.indep_swap(indep, i, j):
                    arcs[i].append(j)
                if o2.indep_swap(indep, i, j):
                    arcs[j].append(i)
        # BFS gives a shortest augmenting path, which is automatically free
        # of shortcuts, so the symmetric difference stays independent.
        parent = {j: None for j in sources}
        queue = deque(sorted(sources))
        path = None
        while queue:
            u = queue.popleft()
            if u in sinks:
                path = []
                while u is not None:
                    path.append(u)
                    u = parent[u]
                path.reverse()
                break
            for w in arcs[u]:
                if w not in parent:
                    parent[w] = u
                    queue.append(w)
        if path is None:
            reached = set(parent)
            x_min = frozenset(e for e in range(n) if e not in reached)
            break
        indep = indep.symmetric_difference(path)

    size1 = o1.rank_of(x_min)
    size2 = o2.rank_of(frozenset(range(n)) - x_min)
    if size1 + size2 != len(indep):
        raise InvariantViolationError("min-max equality failed")
    return indep, x_min, o1.calls + o2.calls - calls0


class WeightedMIInstance:
    """Two equal-rank matroids on a shared ground set with integer weights."""

    def __init__(self, m1, m2, w):
        if m1.n != m2.n or len(w) != m1.n:
            raise ContractError("dimension mismatch")
        if any(abs(x) > WEIGHT_CAP for x in w):
            raise ContractError("weight exceeds cap")
        self.m1, self.m2, self.w = m1, m2, tuple(int(x) for x in w)
        self.n = m1.n
        if m1.rank != m2.rank:
            raise InfeasibleSystemError("matroids must have equal rank")
        self.r = m1.rank
        common, _, _ = cardinality_intersection(m1, m2)
        if len(common) != self.r:
            raise InfeasibleSystemError("no common base exists")

    def to_json(self):
        return {"type": "matroid", "n": self.n,
                "m1": _matroid_json(self.m1), "m2": _matroid_json(self.m2),
                "w": list(self.w)}

    @classmethod
    def from_json(cls, obj):
        if obj.get("type") != "matroid":
            raise ContractError("not a matroid instance file")
        n = obj["n"]
        return cls(_matroid_from_json(n, obj["m1"]),
                   _matroid_from_json(n, obj["m2"]), obj["w"])


def _matroid_json(m):
    if isinstance(m, PartitionMatroid):
        return {"kind": "partition", "blocks": [list(b) for b in m.blocks],
                "caps": list(m.caps)}
    if isinstance(m, UniformMatroid):
        return {"kind": "uniform", "rank": m.r}
    raise ContractError(f"matroid kind {type(m).__name__} has no file form")


def _matroid_from_json(n, obj):
    if obj["kind"] == "partition":
        return PartitionMatroid(n, obj["blocks"], obj["caps"])
    if obj["kind"] == "uniform":
        return UniformMatroid(n, obj["rank"])
    raise ContractError(f"unknown matroid kind {obj['kind']!r}")


def dual_value(inst, p):
    """g(p) via two greedy runs; L-convex in p and shift-invariant."""
    q = tuple(w - x for w, x in zip(inst.w, p))
    return greedy_max_weight_value(inst.m1, p) + greedy_max_weight_value(inst.m2, q)


def _local_step(inst, p):
    q = tuple(w - x for w, x in zip(inst.w, p))
    mv1 = MaxWeightBaseMatroid(inst.m1, p)
    mv2 = MaxWeightBaseMatroid(inst.m2, q)
    common, x_min, _ = cardinality_intersection(mv1, mv2)
    improvement = len(common) - inst.r
    step = tuple(1 if e in x_min else 0 for e in range(inst.n))
    if dual_value(inst, vec_add(p, step)) - dual_value(inst, p) != improvement:
        raise InvariantViolationError("local-step value mismatch")
    return x_min, improvement, common


def matroid_local_direction(inst, p):
    """Best {0,+1}^V direction at p.

    Returns (x, improvement, certificate) where improvement =
    g(p + 1_x) - g(p) = |I| - r for the maximum common independent set I of
    the two max-weight-base matroids; |I| = r certifies optimality of p.
    """
    x_min, improvement, common = _local_step(inst, p)
    return x_min, improvement, len(common)


def matroid_step_length(inst, p, x):
    """Long-step length along 1_x by doubling plus binary search.

    The cap combines the worst-case optimal-dual range with a slack term
    that grows with the current dual value, so far-off warm starts cannot
    trip it while a genuinely unbounded slope still raises.
    """
    w_inf = max(abs(w) for w in inst.w) if inst.n else 0
    g0 = dual_value(inst, p)
    cap = max(4 * inst.r * w_inf + 1, g0 + inst.r * w_inf + 1)
    d = tuple(1 if e in x else 0 for e in range(inst.n))
    from .core import Objective, long_step_length
    g = Objective(lambda pt: dual_value(inst, pt), inst.n, kind="l")
    try:
        return long_step_length(g, tuple(p), d, cap=cap)
    except UnboundedDirectionError as exc:
        raise InvariantViolationError(str(exc)) from exc


@dataclass
class MatroidResult:
    base: frozenset
    dual: tuple
    weight: int
    trace: DescentTrace


def solve_matroid_intersection(inst, p_hat=None, step_rule="long", max_iter=None):
    """Warm-started dual descent; the domain is all of Z^V, so the projection
    step is rounding alone."""
    if step_rule not in ("long", "unit"):
        raise ContractError(f"unknown step rule {step_rule!r}")
    if p_hat is None:
        p_hat = (0,) * inst.n
    p = round_ties_down(p_hat)
    w_inf = max(abs(w) for w in inst.w)
    if max_iter is None:
        max_iter = 10 * inst.n * (w_inf + max(map(abs, p)) + 2)

    t0 = time.perf_counter_ns()
    trace = DescentTrace()
    calls0 = inst.m1.calls + inst.m2.calls
    value = dual_value(inst, p)
    base = None
    while True:
        trace.iterations += 1
        trace.local_calls += 1
        if trace.iterations > max_iter:
            raise DivergenceError("matroid dual descent exceeded safety cap")
        x, improvement, common = _local_step(inst, p)
        if improvement == 0:
            if len(common) != inst.r:
                raise InvariantViolationError("zero improvement without a base")
            base = common
            trace.records.append(IterationRecord((), 0, 0, value))
            break
        lam = 1 if step_rule == "unit" else matroid_step_length(inst, p, x)
        p = tuple(y + lam * (e in x) for e, y in enumerate(p))
        value = dual_value(inst, p)
        trace.records.append(IterationRecord(tuple(sorted(x)), 1, lam, value))
    trace.oracle_calls = inst.m1.calls + inst.m2.calls - calls0
    trace.wall_us = (time.perf_counter_ns() - t0) // 1000

    weight = sum(inst.w[e] for e in base)
    if weight != value:
        raise InvariantViolationError("weight splitting failed at termination")
    return MatroidResult(base, p, weight, trace)


def brute_force_matroid(inst):
    """Exhaustive optimum over common bases; test oracle only."""
    if inst.n > 16:
        raise CapacityError("brute force limited to n <= 16")
    best, argbest = None, []
    for combo in itertools.combinations(range(inst.n), inst.r):
        cand = frozenset(combo)
        if not (inst.m1._indep(cand) and inst.m2._indep(cand)):
            continue
        w = sum(inst.w[e] for e in cand)
        if best is None or w > best:
            best, argbest = w, [cand]
        elif w == best:
            argbest.append(cand)
    if best is None:
        raise InfeasibleSystemError("no common base found by brute force")
    return best, argbest


def normalized_dual_norm(inst, p):
    """Infinity norm of an optimal dual after the mid-range shift, the
    minimum over the shift orbit (g is invariant under p + c*1)."""
    _, improvement, _ = matroid_local_direction(inst, p)
    if improvement != 0:
        raise ContractError("dual is not optimal")
    return (max(p) - min(p)) / 2


def tight_instance(n, weight_scale):
    """Partition-matroid pair on an odd ground set whose unique common base
    forces every optimal dual to spread over (n-1)*W, making the rank-times-
    weight dual bound tight.

    Blocks pair consecutive elements with one parity offset per matroid;
    the leftover singleton on each side is excluded outright.
    """
    if n % 2 == 0 or n < 3:
        raise ContractError("n must be odd and >= 3")
    blocks1 = [(0,)] + [(i, i + 1) for i in range(1, n - 1, 2)]
    caps1 = [0] + [1] * ((n - 1) // 2)
    blocks2 = [(i, i + 1) for i in range(0, n - 1, 2)] + [(n - 1,)]
    caps2 = [1] * ((n - 1) // 2) + [0]
    w = tuple(weight_scale if e % 2 == 0 else -weight_scale for e in range(n))
    return WeightedMIInstance(PartitionMatroid(n, blocks1, caps1),
                              PartitionMatroid(n, blocks2, caps2), w)


def tight_instance_base(n):
    """The unique common base of :func:`tight_instance`: indices 1,3,...,n-2."""
    return frozenset(range(1, n - 1, 2))


def tight_witness_dual(n, weight_scale):
    """An optimal dual of the tight instance with the minimum-possible
    infinity norm r*W: drop by 2W after every even index, stay flat after
    odd ones."""
    r = (n - 1) // 2
    p = []
    level = r * weight_scale
    for e in range(n):
        p.append(level)
        if e % 2 == 0:
            level -= 2 * weight_scale
    return tuple(p)
