"""Discrete energy minimization by L-natural steepest descent with min-cut
local steps.

Energies are sums of convex unary label tables and convex pairwise deviation
functions with optional finite windows. The neighborhood search over each
sign of {0,1}^V reduces to an s-t min cut on n+2 nodes; forbidden moves get
a big-M sentinel capacity, and the graph is solved with Dinic's algorithm.
"""

import time
from dataclasses import dataclass

from .core import (
    INF,
    DescentTrace,
    IterationRecord,
    Objective,
    long_step_length,
    vec_add,
    vec_scale,
)
from .errors import (
    CapacityError,
    ContractError,
    DivergenceError,
    InfeasibleStartError,
    InvariantViolationError,
    UnboundedDirectionError,
)
from .lnatset import LNatSystem, project_box, project_general, round_into


def _check_convex_table(values, what):
    for k in range(1, len(values) - 1):
        if values[k - 1] + values[k + 1] < 2 * values[k]:
            raise ContractError(f"{what} is not discretely convex at offset {k}")


class PairwiseFn:
    """Convex deviation penalty on an integer window (None end = unbounded).

    Kinds: "abs" -> |delta|, "quad" -> delta^2, "table" -> explicit values
    over a finite window. Outside the window the value is +inf.
    """

    def __init__(self, kind, window=(None, None), values=None, scale=1):
        self.kind = kind
        self.lo, self.hi = window
        self.scale = scale
        self.values = list(values) if values is not None else None
        if kind == "table":
            if self.values is None or self.lo is None or self.hi is None:
                raise ContractError("table kind needs a finite window and values")
            if len(self.values) != self.hi - self.lo + 1:
                raise ContractError("table length does not match window")
            _check_convex_table(self.values, "pairwise table")
        elif kind not in ("abs", "quad"):
            raise ContractError(f"unknown pairwise kind {kind!r}")

    def __call__(self, delta):
        if self.lo is not None and delta < self.lo:
            return INF
        if self.hi is not None and delta > self.hi:
            return INF
        if self.kind == "abs":
            return self.scale * abs(delta)
        if self.kind == "quad":
            return self.scale * delta * delta
        return self.values[delta - self.lo]

    def to_json(self):
        out = {"kind": self.kind, "window": [self.lo, self.hi]}
        if self.kind == "table":
            out["values"] = self.values
        elif self.scale != 1:
            out["scale"] = self.scale
        return out

    @classmethod
    def from_json(cls, obj):
        return cls(obj["kind"], tuple(obj.get("window", (None, None))),
                   obj.get("values"), obj.get("scale", 1))


class EnergyInstance:
    """Undirected graph with per-vertex label tables and per-edge penalties."""

    def __init__(self, n, edges, boxes, unary, pairwise):
        self.n = n
        self.edges = [tuple(e) for e in edges]
        if len(boxes) != n or len(unary) != n or len(pairwise) != len(self.edges):
            raise ContractError("field lengths do not match the graph")
        self.boxes = [tuple(b) for b in boxes]
        self.unary = [list(u) for u in unary]
        for i, ((lo, hi), table) in enumerate(zip(self.boxes, self.unary)):
            if hi < lo or len(table) != hi - lo + 1:
                raise ContractError(f"unary table {i} does not match its box")
            _check_convex_table(table, f"unary table {i}")
        for i, j in self.edges:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ContractError(f"bad edge ({i}, {j})")
        self.pairwise = list(pairwise)
        self.system = self._induced_system()  # raises if dom g is empty

    @property
    def m(self):
        return len(self.edges)

    def phi(self, i, label):
        lo, hi = self.boxes[i]
        if label < lo or label > hi:
            return INF
        return self.unary[i][label - lo]

    def _induced_system(self):
        alpha = [b[0] for b in self.boxes]
        beta = [b[1] for b in self.boxes]
        gamma = {}
        for (i, j), fn in zip(self.edges, self.pairwise):
            if fn.hi is not None:
                gamma[(i, j)] = min(gamma.get((i, j), fn.hi), fn.hi)
            if fn.lo is not None:
                gamma[(j, i)] = min(gamma.get((j, i), -fn.lo), -fn.lo)
        return LNatSystem(self.n, alpha, beta, gamma)

    @property
    def has_difference_constraints(self):
        return bool(self.system.gamma)

    def to_json(self):
        return {
            "type": "energy",
            "n": self.n,
            "edges": [list(e) for e in self.edges],
            "box": [list(b) for b in self.boxes],
            "unary": [list(u) for u in self.unary],
            "pairwise": [dict(fn.to_json(), edge=list(e))
                         for e, fn in zip(self.edges, self.pairwise)],
        }

    @classmethod
    def from_json(cls, obj):
        if obj.get("type") != "energy":
            raise ContractError("not an energy instance file")
        edges = [tuple(e) for e in obj["edges"]]
        by_edge = {tuple(p["edge"]): PairwiseFn.from_json(p)
                   for p in obj["pairwise"]}
        pairwise = [by_edge[e] for e in edges]
        return cls(obj["n"], edges, obj["box"], obj["unary"], pairwise)


def energy_value(inst, p):
    if len(p) != inst.n:
        raise ContractError("labeling dimension mismatch")
    total = 0
    for i, x in enumerate(p):
        v = inst.phi(i, x)
        if v == INF:
            return INF
        total += v
    for (i, j), fn in zip(inst.edges, inst.pairwise):
        v = fn(p[j] - p[i])
        if v == INF:
            return INF
        total += v
    return total


@dataclass
class CutGraph:
    n: int                  # vertex count excluding source/sink
    arcs: list              # (u, v, cap); nodes 0..n-1, source n, sink n+1
    const: int              # offset: local objective = cut value + const
    big_m: int
    sentinel_arcs: frozenset = frozenset()  # indices of forbidden-move arcs

    @property
    def source(self):
        return self.n

    @property
    def sink(self):
        return self.n + 1

    @property
    def num_nodes(self):
        return self.n + 2


def build_cut_graph(inst, p, sign):
    """Encode the {0,1}^V neighborhood problem at p for one sign as a min
    cut: a node is on the source side iff its coordinate moves.

    Each pairwise term contributes one cross arc of capacity b + c - 2a (its
    submodularity margin, nonnegative by convexity); infinite entries are
    capped at a sentinel chosen large enough that no finite-optimal cut ever
    pays it. The decomposition keeps the sentinel out of negative positions,
    so capped arcs are exactly the forbidden moves.
    """
    if sign not in (1, -1):
        raise ContractError("sign must be +1 or -1")
    base = energy_value(inst, p)
    if base == INF:
        raise InfeasibleStartError("current labeling has infinite energy")

    unary01 = []
    finite_sum = 0
    for i, x in enumerate(p):
        u0, u1 = inst.phi(i, x), inst.phi(i, x + sign)
        unary01.append((u0, u1))
        finite_sum += abs(u0) + (abs(u1) if u1 != INF else 0)
    pair_abc = []
    for (i, j), fn in zip(inst.edges, inst.pairwise):
        delta = p[j] - p[i]
        a, b, c = fn(delta), fn(delta + sign), fn(delta - sign)
        pair_abc.append((a, b, c))
        finite_sum += abs(a) + (abs(b) if b != INF else 0) + (abs(c) if c != INF else 0)
    # Sentinel must dominate the sum of all finite capacities even after the
    # b + c - 2a reparametrization; 8x the finite mass gives a safe margin.
    big_m = 1 + 8 * finite_sum

    def capped(v):
        return big_m if v == INF else v

    linear = [capped(u1) - u0 for u0, u1 in unary01]
    const = sum(u0 for u0, _ in unary01)
    arcs = []
    sentinels = set()
    for (i, j), (a, b, c) in zip(inst.edges, pair_abc):
        if b != INF and c != INF:
            beta = b + c - 2 * a
            if beta < 0:
                raise ContractError("pairwise term lost submodularity")
            # moving j without i costs the margin: arc source-side j -> i
            linear[i] += c - a
            linear[j] += a - c
            const += a
            if beta:
                arcs.append((j, i, beta))
        elif b == INF and c != INF:
            linear[i] += c - a
            linear[j] += a - c
            const += a
            sentinels.add(len(arcs))
            arcs.append((j, i, big_m + c - 2 * a))
        elif c == INF and b != INF:
            linear[j] += b - a
            linear[i] += a - b
            const += a
            sentinels.add(len(arcs))
            arcs.append((i, j, big_m + b - 2 * a))
        else:
            # both single moves forbidden: the pair must move together
            const += a
            sentinels.add(len(arcs))
            arcs.append((i, j, big_m))
            sentinels.add(len(arcs))
            arcs.append((j, i, big_m))
    source, sink = inst.n, inst.n + 1
    for i, coef in enumerate(linear):
        if coef > 0:
            if unary01[i][1] == INF:
                sentinels.add(len(arcs))
            arcs.append((i, sink, coef))
        elif coef < 0:
            arcs.append((source, i, -coef))
            const += coef
    graph = CutGraph(inst.n, arcs, const, big_m, frozenset(sentinels))
    if len(arcs) > 3 * inst.m + inst.n:
        raise InvariantViolationError("cut graph exceeds the arc bound")
    return graph


class _FlowNet:
    def __init__(self, num_nodes):
        self.adj = [[] for _ in range(num_nodes)]

    def add_edge(self, u, v, cap):
        self.adj[u].append([v, cap, len(self.adj[v])])
        self.adj[v].append([u, 0, len(self.adj[u]) - 1])

    def max_flow(self, s, t):
        flow = 0
        n = len(self.adj)
        while True:
            level = [-1] * n
            level[s] = 0
            queue = [s]
            for u in queue:
                for v, cap, _ in self.adj[u]:
                    if cap > 0 and level[v] < 0:
                        level[v] = level[u] + 1
                        queue.append(v)
            if level[t] < 0:
                return flow
            it = [0] * n

            def dfs(u, pushed):
                if u == t:
                    return pushed
                while it[u] < len(self.adj[u]):
                    v, cap, rev = self.adj[u][it[u]]
                    if cap > 0 and level[v] == level[u] + 1:
                        got = dfs(v, min(pushed, cap))
                        if got > 0:
                            self.adj[u][it[u]][1] -= got
                            self.adj[v][rev][1] += got
                            return got
                    it[u] += 1
                return 0

            while True:
                pushed = dfs(s, float("inf"))
                if pushed == 0:
                    break
                flow += pushed

    def residual_reachable(self, s):
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for v, cap, _ in self.adj[u]:
                if cap > 0 and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen


def dinic_min_cut(graph):
    """Exact min s-t cut of a CutGraph: (cut value, source-side node set).

    The returned side is the residual-reachable set, the unique inclusion-
    minimal minimum cut, so the output is deterministic.
    """
    net = _FlowNet(graph.num_nodes)
    for u, v, cap in graph.arcs:
        if cap < 0:
            raise ContractError("negative capacity")
        net.add_edge(u, v, cap)
    value = net.max_flow(graph.source, graph.sink)
    side = net.residual_reachable(graph.source)
    return value, side


def energy_local_direction(inst, p):
    """Best direction in {0,-1}^V u {0,+1}^V via two cuts.

    Ties prefer the + sign; a zero improvement returns the zero direction.
    """
    best = None
    for rank, sign in enumerate((1, -1)):
        graph = build_cut_graph(inst, p, sign)
        cut, side = dinic_min_cut(graph)
        for idx in graph.sentinel_arcs:
            u, v, _ = graph.arcs[idx]
            if u in side and v not in side:
                raise InvariantViolationError(
                    "sentinel arc cut despite the zero direction being finite")
        moved = sorted(v for v in side if v != graph.source)
        d = tuple(sign if i in moved else 0 for i in range(inst.n))
        val = energy_value(inst, vec_add(p, d))
        if val != cut + graph.const:
            raise InvariantViolationError("cut arithmetic disagrees with energy")
        improvement = val - energy_value(inst, p)
        key = (improvement, rank)
        if best is None or key < best[0]:
            best = (key, d, improvement)
    _, d, improvement = best
    if improvement == 0:
        return (0,) * inst.n, 0
    return d, improvement


@dataclass
class EnergyResult:
    labeling: tuple
    value: float
    trace: DescentTrace


def solve_energy(inst, p_hat=None, step_rule="unit", max_iter=None):
    """Warm-started descent; the prediction is clamped into the box (or
    projected through the constraint graph when smoothness windows exist),
    rounded, then improved by min-cut local steps."""
    if step_rule not in ("long", "unit"):
        raise ContractError(f"unknown step rule {step_rule!r}")
    if p_hat is None:
        p_hat = (0,) * inst.n
    sys_ = inst.system
    if inst.has_difference_constraints:
        q = project_general(sys_, p_hat)
    else:
        q = project_box(sys_.alpha, sys_.beta, p_hat)
    p = round_into(sys_, q)
    value = energy_value(inst, p)
    if value == INF:
        raise InfeasibleStartError("projected start has infinite energy")
    width = max(hi - lo for lo, hi in inst.boxes)
    if max_iter is None:
        max_iter = 10 * inst.n * (width + 1)

    t0 = time.perf_counter_ns()
    trace = DescentTrace()
    g = Objective(lambda pt: energy_value(inst, pt), inst.n, kind="lnat")
    while True:
        trace.iterations += 1
        trace.local_calls += 1
        if trace.iterations > max_iter:
            raise DivergenceError("energy descent exceeded safety cap")
        d, improvement = energy_local_direction(inst, p)
        if improvement == 0:
            trace.records.append(IterationRecord((), 0, 0, value))
            break
        if step_rule == "unit":
            lam = 1
        else:
            try:
                lam = long_step_length(g, p, d, cap=max(width, 1))
            except UnboundedDirectionError as exc:
                raise InvariantViolationError(str(exc)) from exc
        p = vec_add(p, vec_scale(d, lam))
        value = energy_value(inst, p)
        support = tuple(i for i, x in enumerate(d) if x != 0)
        trace.records.append(IterationRecord(support, 1 if any(x > 0 for x in d) else -1,
                                             lam, value))
    trace.wall_us = (time.perf_counter_ns() - t0) // 1000
    return EnergyResult(p, value, trace)


def brute_force_energy(inst, capacity=10 ** 7):
    """Exhaustive minimum and the lexicographically smallest argmin."""
    total = 1
    for lo, hi in inst.boxes:
        total *= hi - lo + 1
        if total > capacity:
            raise CapacityError("label grid too large for brute force")
    best_val, best_p = INF, None
    p = [lo for lo, _ in inst.boxes]
    while True:
        pt = tuple(p)
        v = energy_value(inst, pt)
        if v < best_val:
            best_val, best_p = v, pt
        i = inst.n - 1
        while i >= 0:
            p[i] += 1
            if p[i] <= inst.boxes[i][1]:
                break
            p[i] = inst.boxes[i][0]
            i -= 1
        if i < 0:
            break
    if best_p is None:
        raise InfeasibleStartError("energy is infinite everywhere")
    return best_val, best_p


def toy_instance():
    """Two-vertex path with opposing unary pulls and an absolute-deviation
    penalty; global minimum 2 at labeling (0, 0)."""
    return EnergyInstance(
        2, [(0, 1)], [(0, 2), (0, 2)],
        [[0, 1, 2], [2, 1, 0]],
        [PairwiseFn("abs")],
    )
