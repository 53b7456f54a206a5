"""Deterministic instance generators for the experiment harness and tests.

Every family plants the invariant its solver assumes (a perfect matching, a
common base, a feasible labeling), so generated instances never fail the
load-time checks. A fixed seed reproduces the instance byte for byte.
"""

import numpy as np

from .core import Objective
from .energy import EnergyInstance, PairwiseFn, energy_value, toy_instance
from .errors import CapacityError, ContractError
from .lnatset import LNatSystem
from .matching import MatchingInstance
from .matroid import PartitionMatroid, WeightedMIInstance, tight_instance

DESK_CAP = 200


def _rng(seed, *stream):
    return np.random.default_rng([int(seed)] + [int(x) for x in stream])


def gen_matching(n, seed, weight_range=20, extra_edges=2.0):
    """Random bipartite instance on n vertices with a planted perfect
    matching plus extra random edges."""
    if n % 2 or n < 2 or n > DESK_CAP:
        raise CapacityError(f"n must be even, 2 <= n <= {DESK_CAP}")
    k = n // 2
    rng = _rng(seed, 1)
    left = list(range(k))
    right = list(range(k, n))
    perm = rng.permutation(k)
    edges = {}
    for i in range(k):
        edges[(i, int(perm[i]))] = int(rng.integers(-weight_range, weight_range + 1))
    target = min(k * k, int(k * (1 + extra_edges)))
    while len(edges) < target:
        i = int(rng.integers(k))
        j = int(rng.integers(k))
        key = (i, j)
        if key not in edges:
            edges[key] = int(rng.integers(-weight_range, weight_range + 1))
    edge_list = [(left[i], right[j], w) for (i, j), w in sorted(edges.items())]
    return MatchingInstance(left, right, edge_list)


def gen_matroid(n, seed, rank=None, weight_range=8):
    """Random partition-matroid pair with a planted common base of the
    requested rank."""
    if not 2 <= n <= DESK_CAP:
        raise CapacityError(f"need 2 <= n <= {DESK_CAP}")
    rng = _rng(seed, 2)
    r = rank if rank is not None else max(1, n // 3)
    planted = set(int(x) for x in rng.choice(n, size=r, replace=False))

    def random_partition_with_base():
        order = [int(x) for x in rng.permutation(n)]
        num_blocks = int(rng.integers(max(1, r // 2 + 1), n + 1))
        blocks = [[] for _ in range(num_blocks)]
        for idx, e in enumerate(order):
            blocks[idx % num_blocks].append(e)
        blocks = [sorted(b) for b in blocks if b]
        caps = [sum(1 for e in b if e in planted) for b in blocks]
        return PartitionMatroid(n, blocks, caps)

    m1 = random_partition_with_base()
    m2 = random_partition_with_base()
    w = [int(x) for x in rng.integers(-weight_range, weight_range + 1, size=n)]
    return WeightedMIInstance(m1, m2, w)


def _random_convex_table(rng, length, slope_range=4):
    # convex = nondecreasing increments
    start = int(rng.integers(-slope_range, slope_range + 1))
    increments = sorted(int(rng.integers(-slope_range, slope_range + 1))
                        for _ in range(length - 1))
    values = [start]
    for inc in increments:
        values.append(values[-1] + inc)
    shift = -min(values)
    return [v + shift for v in values]


def gen_energy(n, seed, labels=4, windowed=False, weight_range=6):
    """Random sparse-graph energy with convex tables; a random labeling is
    planted feasible when smoothness windows are requested."""
    if not 1 <= n <= 24:
        raise CapacityError("energy generator limited to n <= 24")
    rng = _rng(seed, 3)
    boxes = []
    unary = []
    for _ in range(n):
        lo = int(rng.integers(-2, 3))
        hi = lo + labels - 1
        boxes.append((lo, hi))
        unary.append(_random_convex_table(rng, labels, weight_range))
    edges = []
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges.append((min(i, j), max(i, j)))
    extra = n // 2
    tries = 0
    while extra > 0 and tries < 50:
        tries += 1
        i, j = sorted(int(x) for x in rng.integers(0, n, size=2))
        if i != j and (i, j) not in edges:
            edges.append((i, j))
            extra -= 1
    edges.sort()
    planted = [int(rng.integers(lo, hi + 1)) for lo, hi in boxes]
    pairwise = []
    for i, j in edges:
        kind = ("abs", "quad", "table")[int(rng.integers(3))]
        if windowed:
            dev = planted[j] - planted[i]
            window = (dev - int(rng.integers(1, labels)),
                      dev + int(rng.integers(1, labels)))
        else:
            lo_w = boxes[j][0] - boxes[i][1]
            hi_w = boxes[j][1] - boxes[i][0]
            window = (lo_w, hi_w)
        if kind == "table":
            values = _random_convex_table(rng, window[1] - window[0] + 1,
                                          weight_range)
            pairwise.append(PairwiseFn("table", window, values))
        else:
            pairwise.append(PairwiseFn(kind, window))
    return EnergyInstance(n, edges, boxes, unary, pairwise)


def gen_generic(n, seed, labels=3, weight_range=5):
    """Random bounded L-natural objective: separable convex unaries plus
    convex difference penalties on a random sparse pair set. Returns
    (objective, system)."""
    inst = gen_energy(n, seed, labels=labels, weight_range=weight_range)
    g = Objective(lambda p: energy_value(inst, p), n, kind="lnat")
    return g, inst


def gen_instance(kind, size, seed, **opts):
    """Instance-file payload for a named family; deterministic in (kind,
    size, seed, opts)."""
    if kind == "matching":
        return gen_matching(size, seed, **opts).to_json()
    if kind == "matroid":
        family = opts.pop("family", "random")
        if family == "tight":
            return tight_instance(size, opts.get("weight", 1)).to_json()
        return gen_matroid(size, seed, **opts).to_json()
    if kind == "energy":
        if opts.pop("fixture", None) == "toy":
            return toy_instance().to_json()
        return gen_energy(size, seed, **opts).to_json()
    raise ContractError(f"unknown instance kind {kind!r}")


def load_instance(obj):
    """Instantiate from a parsed instance-file payload."""
    kind = obj.get("type")
    if kind == "matching":
        return MatchingInstance.from_json(obj)
    if kind == "matroid":
        return WeightedMIInstance.from_json(obj)
    if kind == "energy":
        return EnergyInstance.from_json(obj)
    raise ContractError(f"unknown instance type {kind!r}")


def load_system(obj):
    return LNatSystem.from_json(obj)
