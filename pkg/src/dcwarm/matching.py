"""Maximum-weight perfect bipartite matching by warm-started dual descent.

The dual minimizes sum(s) - sum(t) subject to s_i - t_j >= w_ij. Each descent
iteration finds a minimum vertex cover of the tight-edge subgraph via
Hopcroft-Karp; a cover of size n/2 certifies optimality and any maximum
matching on the tight edges is returned as the primal optimum.
"""

import itertools
import time
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .core import (
    DescentTrace,
    IterationRecord,
    linf_pm_norm,
    round_ties_down,
)
from .errors import (
    CapacityError,
    ContractError,
    DivergenceError,
    InfeasibleSystemError,
    InvariantViolationError,
)

WEIGHT_CAP = 2 ** 31


class DualPair(NamedTuple):
    s: tuple  # over L, in instance order
    t: tuple  # over R, in instance order


@dataclass
class CoverResult:
    matching: list   # list of (left_index, right_index) pairs
    cover_l: set     # S, subset of left indices
    cover_r: set     # T, subset of right indices

    @property
    def size(self):
        return len(self.cover_l) + len(self.cover_r)


class MatchingInstance:
    """Bipartite graph with integer weights; must admit a perfect matching.

    Vertices are given by external ids; internally each side is indexed
    0..n/2-1 in the order the ids were supplied.
    """

    def __init__(self, left_ids, right_ids, edges):
        self.left_ids = list(left_ids)
        self.right_ids = list(right_ids)
        if len(self.left_ids) != len(self.right_ids):
            raise ContractError("bipartition sides must have equal size")
        if set(self.left_ids) & set(self.right_ids):
            raise ContractError("bipartition sides must be disjoint")
        self.k = len(self.left_ids)           # n/2
        self.n = 2 * self.k
        l_index = {u: i for i, u in enumerate(self.left_ids)}
        r_index = {v: j for j, v in enumerate(self.right_ids)}
        seen = {}
        for u, v, w in edges:
            if u not in l_index or v not in r_index:
                raise ContractError(f"edge ({u}, {v}) leaves the bipartition")
            if abs(w) > WEIGHT_CAP:
                raise ContractError(f"weight {w} exceeds cap")
            seen[(l_index[u], r_index[v])] = int(w)
        self.edges = sorted((i, j, w) for (i, j), w in seen.items())
        self.adj = [[] for _ in range(self.k)]
        for i, j, _ in self.edges:
            self.adj[i].append(j)
        match_l, _, size = hopcroft_karp(self.k, self.k, self.adj)
        if size != self.k:
            raise InfeasibleSystemError("instance has no perfect matching")
        self._witness = match_l

    @property
    def m(self):
        return len(self.edges)

    def to_json(self):
        return {
            "type": "matching",
            "L": self.left_ids,
            "R": self.right_ids,
            "edges": [[self.left_ids[i], self.right_ids[j], w]
                      for i, j, w in self.edges],
        }

    @classmethod
    def from_json(cls, obj):
        if obj.get("type") != "matching":
            raise ContractError("not a matching instance file")
        return cls(obj["L"], obj["R"], obj["edges"])


def hopcroft_karp(n_left, n_right, adj):
    """Maximum-cardinality matching; adjacency must be index-sorted for
    deterministic output. Returns (match_l, match_r, size)."""
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    INF_D = n_left + 1
    dist = [0] * n_left

    def bfs():
        q = deque()
        for u in range(n_left):
            if match_l[u] == -1:
                dist[u] = 0
                q.append(u)
            else:
                dist[u] = INF_D
        found = False
        while q:
            u = q.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w == -1:
                    found = True
                elif dist[w] == INF_D:
                    dist[w] = dist[u] + 1
                    q.append(w)
        return found

    def dfs(u):
        for v in adj[u]:
            w = match_r[v]
            if w == -1 or (dist[w] == dist[u] + 1 and dfs(w)):
                match_l[u] = v
                match_r[v] = u
                return True
        dist[u] = INF_D
        return False

    size = 0
    while bfs():
        for u in range(n_left):
            if match_l[u] == -1 and dfs(u):
                size += 1
    return match_l, match_r, size


def max_matching_min_cover(n_left, n_right, edges):
    """Maximum matching plus a minimum vertex cover (Konig) of a bipartite
    graph given as (i, j) index pairs."""
    adj = [[] for _ in range(n_left)]
    for i, j in sorted(set(edges)):
        adj[i].append(j)
    match_l, match_r, _ = hopcroft_karp(n_left, n_right, adj)

    # Alternating reachability from unmatched left vertices: unmatched edges
    # L->R, matched edges R->L. Cover = (L not reached) u (R reached).
    reach_l = [False] * n_left
    reach_r = [False] * n_right
    q = deque(u for u in range(n_left) if match_l[u] == -1)
    for u in q:
        reach_l[u] = True
    while q:
        u = q.popleft()
        for v in adj[u]:
            if match_l[u] == v or reach_r[v]:
                continue
            reach_r[v] = True
            w = match_r[v]
            if w != -1 and not reach_l[w]:
                reach_l[w] = True
                q.append(w)
    cover_l = {u for u in range(n_left) if not reach_l[u] and match_l[u] != -1}
    cover_r = {v for v in range(n_right) if reach_r[v]}
    matching = [(u, match_l[u]) for u in range(n_left) if match_l[u] != -1]
    result = CoverResult(matching, cover_l, cover_r)
    if result.size != len(matching):
        raise InvariantViolationError("Konig equality failed")
    return result


def dual_objective(inst, p):
    if len(p.s) != inst.k or len(p.t) != inst.k:
        raise ContractError("dual dimension mismatch")
    return sum(p.s) - sum(p.t)


def dual_feasible(inst, p):
    return all(p.s[i] - p.t[j] >= w for i, j, w in inst.edges)


def project_dual(inst, p_hat):
    """Shift-and-round projection of an arbitrary real dual prediction into
    the feasible integer duals.

    eps is the worst constraint violation; a uniform +-eps/2 shift lands on
    the hull, and ties-down rounding stays feasible. Arithmetic is exact.
    """
    s_hat = [Fraction(x) for x in p_hat.s]
    t_hat = [Fraction(x) for x in p_hat.t]
    eps = max(w - s_hat[i] + t_hat[j] for i, j, w in inst.edges)
    if eps > 0:
        half = eps / 2
        s_hat = [x + half for x in s_hat]
        t_hat = [x - half for x in t_hat]
    p = DualPair(round_ties_down(s_hat), round_ties_down(t_hat))
    if not dual_feasible(inst, p):
        raise InvariantViolationError("projected-and-rounded dual infeasible")
    return p


def tight_edges(inst, p):
    """Edges with zero slack; the only ones visible to the local step."""
    out = []
    for i, j, w in inst.edges:
        slack = p.s[i] - p.t[j] - w
        if slack < 0:
            raise InfeasibleSystemError(f"dual infeasible on edge ({i}, {j})")
        if slack == 0:
            out.append((i, j))
    return out


def matching_step_length(inst, p, cover_l, cover_r):
    """Smallest slack among edges not touched by the cover: the exact long
    step. Positive because those edges are non-tight with integer slack."""
    if len(cover_l) + len(cover_r) >= inst.k:
        raise ContractError("step undefined once the cover is perfect")
    lam = None
    for i, j, w in inst.edges:
        if i in cover_l or j in cover_r:
            continue
        slack = p.s[i] - p.t[j] - w
        if lam is None or slack < lam:
            lam = slack
    if lam is None:
        raise InvariantViolationError(
            "no edge between uncovered sides; perfect-matching invariant broken")
    return lam


@dataclass
class MatchingResult:
    matching: list      # [(left_id, right_id), ...]
    dual: DualPair
    weight: int
    trace: DescentTrace


def solve_matching(inst, p_hat=None, step_rule="long", max_iter=None):
    """Warm-started dual descent; p_hat is a real DualPair or None for the
    zero prediction."""
    if step_rule not in ("long", "unit"):
        raise ContractError(f"unknown step rule {step_rule!r}")
    if p_hat is None:
        p_hat = DualPair((0,) * inst.k, (0,) * inst.k)
    p = project_dual(inst, p_hat)
    if max_iter is None:
        w_span = max(abs(w) for _, _, w in inst.edges) + 1
        start_span = max(map(abs, p.s + p.t)) + 1
        max_iter = 10 * inst.n * (w_span + start_span)

    t0 = time.perf_counter_ns()
    trace = DescentTrace()
    value = dual_objective(inst, p)
    while True:
        trace.iterations += 1
        trace.local_calls += 1
        if trace.iterations > max_iter:
            raise DivergenceError("matching dual descent exceeded safety cap")
        e_star = tight_edges(inst, p)
        cover = max_matching_min_cover(inst.k, inst.k, e_star)
        if cover.size == inst.k:
            trace.records.append(IterationRecord((), 0, 0, value))
            matching = cover.matching
            break
        lam = 1 if step_rule == "unit" else matching_step_length(
            inst, p, cover.cover_l, cover.cover_r)
        s = tuple(x + lam * (i in cover.cover_l) for i, x in enumerate(p.s))
        t = tuple(x + lam * (j not in cover.cover_r) for j, x in enumerate(p.t))
        p = DualPair(s, t)
        value = dual_objective(inst, p)
        support = tuple(sorted(cover.cover_l) +
                        [inst.k + j for j in range(inst.k) if j not in cover.cover_r])
        trace.records.append(IterationRecord(support, 1, lam, value))
    trace.wall_us = (time.perf_counter_ns() - t0) // 1000

    weights = {(i, j): w for i, j, w in inst.edges}
    total = sum(weights[e] for e in matching)
    if total != value:
        raise InvariantViolationError("strong duality failed at termination")
    pairs = [(inst.left_ids[i], inst.right_ids[j]) for i, j in sorted(matching)]
    return MatchingResult(pairs, p, total, trace)


def brute_force_matching(inst):
    """Exhaustive optimum over all perfect matchings; test oracle only."""
    if inst.k > 8:
        raise CapacityError("brute force limited to n/2 <= 8")
    weights = {(i, j): w for i, j, w in inst.edges}
    best, argbest = None, []
    for perm in itertools.permutations(range(inst.k)):
        total = 0
        ok = True
        for i, j in enumerate(perm):
            w = weights.get((i, j))
            if w is None:
                ok = False
                break
            total += w
        if not ok:
            continue
        if best is None or total > best:
            best, argbest = total, [tuple(enumerate(perm))]
        elif total == best:
            argbest.append(tuple(enumerate(perm)))
    if best is None:
        raise InfeasibleSystemError("no perfect matching found by brute force")
    return best, argbest


def verify_matching_result(inst, result):
    """Independent optimality certificate: feasibility, perfection, tightness
    and strong duality, checked from scratch."""
    p = result.dual
    checks = {
        "dual_feasible": dual_feasible(inst, p),
        "matching_perfect": len(result.matching) == inst.k,
        "strong_duality": dual_objective(inst, p) == result.weight,
    }
    l_index = {u: i for i, u in enumerate(inst.left_ids)}
    r_index = {v: j for j, v in enumerate(inst.right_ids)}
    weights = {(i, j): w for i, j, w in inst.edges}
    used_l, used_r = set(), set()
    tight = True
    for u, v in result.matching:
        i, j = l_index[u], r_index[v]
        used_l.add(i)
        used_r.add(j)
        w = weights.get((i, j))
        if w is None or p.s[i] - p.t[j] != w:
            tight = False
    checks["matching_tight"] = tight
    checks["matching_disjoint"] = len(used_l) == len(used_r) == len(result.matching)
    checks["verified"] = all(checks.values())
    return checks


def perturbed_prediction(p_star, noise_l, noise_r):
    return DualPair(tuple(a + b for a, b in zip(p_star.s, noise_l)),
                    tuple(a + b for a, b in zip(p_star.t, noise_r)))


def dual_distance_pm(p, q):
    diff = [a - b for a, b in zip(p.s + p.t, q.s + q.t)]
    return linf_pm_norm(diff)[2]


def path_cost_instance(n, cost):
    """Path graph with the alternating cost pattern that forces every optimal
    dual of the min-cost form to spread over a range proportional to n.

    Vertices 1..n; edge {i, i+1} costs ``cost`` for odd i and 0 for even i.
    Returned as a max-weight instance with w = -cost so the dual descent
    applies; use :func:`dual_to_min_form` to read the min-form dual back.
    """
    if n % 2 or n < 2:
        raise ContractError("n must be even and >= 2")
    left = [i for i in range(1, n + 1) if i % 2 == 1]
    right = [i for i in range(1, n + 1) if i % 2 == 0]
    edges = []
    for i in range(1, n):
        c = cost if i % 2 == 1 else 0
        u, v = (i, i + 1) if i % 2 == 1 else (i + 1, i)
        edges.append((u, v, -c))
    return MatchingInstance(left, right, edges)


def dual_to_min_form(inst, p):
    """Convert a max-form dual (s, t) to the min-form y over vertex ids:
    y_i = -s_i on the left side, y_j = t_j on the right side."""
    y = {}
    for i, u in enumerate(inst.left_ids):
        y[u] = -p.s[i]
    for j, v in enumerate(inst.right_ids):
        y[v] = p.t[j]
    return y
