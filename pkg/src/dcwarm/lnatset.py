"""L/L-natural-convex sets as box plus difference constraints.

A system holds alpha_i <= p_i <= beta_i and p_j - p_i <= gamma_ij. Membership
and rounding are exact integer checks; the signed-infinity-norm projection
onto the convex hull is computed by Bellman-Ford on an auxiliary graph, with
all arithmetic on exact rationals so rounding decisions are never subject to
floating-point noise.
"""

import json
from fractions import Fraction

from .core import linf_pm_norm, round_ties_down
from .errors import ContractError, InfeasibleSystemError, InvariantViolationError

FEAS_TOL = Fraction(1, 10 ** 9)


def _as_fraction(x):
    # Fraction(float) is exact for binary floats, so no precision is lost.
    return x if isinstance(x, Fraction) else Fraction(x)


class LNatSystem:
    """Non-empty L-natural-convex set; L-convex when no box is given.

    alpha entries of None mean -inf, beta entries of None mean +inf, and
    gamma is a sparse {(i, j): bound} map for constraints p_j - p_i <= bound
    (missing pairs are unconstrained). Emptiness is rejected at construction
    via negative-cycle detection on the induced constraint graph.
    """

    def __init__(self, n, alpha=None, beta=None, gamma=None):
        if n < 1:
            raise ContractError("dimension must be >= 1")
        self.n = n
        self.alpha = tuple(alpha) if alpha is not None else (None,) * n
        self.beta = tuple(beta) if beta is not None else (None,) * n
        if len(self.alpha) != n or len(self.beta) != n:
            raise ContractError("alpha/beta length mismatch")
        self.gamma = {}
        for (i, j), bound in (gamma or {}).items():
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise ContractError(f"bad gamma index pair ({i}, {j})")
            if bound is None:
                continue  # +inf bound: constraint absent
            prev = self.gamma.get((i, j))
            self.gamma[(i, j)] = bound if prev is None else min(prev, bound)
        for i, (a, b) in enumerate(zip(self.alpha, self.beta)):
            if a is not None and b is not None and a > b:
                raise InfeasibleSystemError(f"empty box at coordinate {i}")
        self._check_nonempty()

    def _check_nonempty(self):
        # Difference-constraint feasibility: Bellman-Ford with a virtual
        # super-source (all distances start at 0); any further relaxation
        # after num_nodes - 1 rounds exposes a negative cycle.
        anchor = self.n
        arcs = [(i, j, g) for (i, j), g in self.gamma.items()]
        for i, b in enumerate(self.beta):
            if b is not None:
                arcs.append((anchor, i, b))
        for i, a in enumerate(self.alpha):
            if a is not None:
                arcs.append((i, anchor, -a))
        dist = [0] * (self.n + 1)
        for _ in range(self.n):
            changed = False
            for u, v, w in arcs:
                if dist[u] + w < dist[v]:
                    dist[v] = dist[u] + w
                    changed = True
            if not changed:
                break
        else:
            for u, v, w in arcs:
                if dist[u] + w < dist[v]:
                    raise InfeasibleSystemError("constraint system is empty")

    def contains(self, p):
        if len(p) != self.n:
            raise ContractError(f"point has dimension {len(p)}, expected {self.n}")
        for i, x in enumerate(p):
            if self.alpha[i] is not None and x < self.alpha[i]:
                return False
            if self.beta[i] is not None and x > self.beta[i]:
                return False
        for (i, j), g in self.gamma.items():
            if p[j] - p[i] > g:
                return False
        return True

    def contains_relaxed(self, q, tol=FEAS_TOL):
        """Real-relaxed membership test with tolerance (conv(S) membership)."""
        if len(q) != self.n:
            raise ContractError(f"point has dimension {len(q)}, expected {self.n}")
        q = [_as_fraction(x) for x in q]
        tol = _as_fraction(tol)
        for i, x in enumerate(q):
            if self.alpha[i] is not None and x < self.alpha[i] - tol:
                return False
            if self.beta[i] is not None and x > self.beta[i] + tol:
                return False
        for (i, j), g in self.gamma.items():
            if q[j] - q[i] > g + tol:
                return False
        return True

    def finite_box(self):
        """Return (lo, hi) integer bounds; raises if any side is infinite."""
        if any(a is None for a in self.alpha) or any(b is None for b in self.beta):
            raise ContractError("system is not finitely boxed")
        return self.alpha, self.beta

    def to_json(self):
        return {
            "n": self.n,
            "alpha": list(self.alpha),
            "beta": list(self.beta),
            "gamma": [[i, j, g] for (i, j), g in sorted(self.gamma.items())],
        }

    @classmethod
    def from_json(cls, obj):
        gamma = {(i, j): g for i, j, g in obj.get("gamma", [])}
        return cls(obj["n"], obj.get("alpha"), obj.get("beta"), gamma)

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_json(json.load(f))


def project_box(alpha, beta, p_hat):
    """Coordinate-wise clamp of p_hat into [alpha, beta] (None = unbounded)."""
    out = []
    for a, b, x in zip(alpha, beta, p_hat):
        if a is not None and x < a:
            x = a
        if b is not None and x > b:
            x = b
        out.append(x)
    return tuple(out)


def projection_graph(system, p_hat):
    """Auxiliary shortest-path graph for the hull projection.

    Nodes 0..n-1 are the coordinates, node n the zero anchor, node n+1 the
    source s and node n+2 the sink t. Arc weights are the constraint bounds
    shifted by p_hat; constraints with infinite bounds contribute no arc, so
    the arc count stays within m + 4n + 2.
    """
    n = system.n
    p_hat = [_as_fraction(x) for x in p_hat]
    anchor, s, t = n, n + 1, n + 2
    arcs = []
    for (i, j), g in sorted(system.gamma.items()):
        arcs.append((i, j, g - p_hat[j] + p_hat[i]))
    for i, a in enumerate(system.alpha):
        if a is not None:
            arcs.append((i, anchor, -a + p_hat[i]))
    for i, b in enumerate(system.beta):
        if b is not None:
            arcs.append((anchor, i, b - p_hat[i]))
    for v in range(n + 1):
        arcs.append((s, v, Fraction(0)))
        arcs.append((v, t, Fraction(0)))
    return n + 3, arcs


def project_general(system, p_hat):
    """Signed-infinity-norm projection of p_hat onto conv(system).

    Runs Bellman-Ford from the source of the auxiliary graph, anchors the
    potential at the zero node, and returns p_hat + q as a tuple of exact
    rationals.
    """
    n = system.n
    if len(p_hat) != n:
        raise ContractError(f"point has dimension {len(p_hat)}, expected {n}")
    p_hat = [_as_fraction(x) for x in p_hat]
    if not system.gamma:
        # pure box: the clamp is already a projection, and it is the one the
        # box-constrained solvers use, so stay consistent with them
        return project_box(system.alpha, system.beta, p_hat)
    num_nodes, arcs = projection_graph(system, p_hat)
    s = n + 1
    dist = [None] * num_nodes
    dist[s] = Fraction(0)
    for _ in range(num_nodes - 1):
        changed = False
        for u, v, w in arcs:
            if dist[u] is not None and (dist[v] is None or dist[u] + w < dist[v]):
                dist[v] = dist[u] + w
                changed = True
        if not changed:
            break
    else:
        for u, v, w in arcs:
            if dist[u] is not None and (dist[v] is None or dist[u] + w < dist[v]):
                raise InfeasibleSystemError("negative cycle: corrupted system")
    anchor = dist[n]
    return tuple(p_hat[i] + dist[i] - anchor for i in range(n))


def round_into(system, q, tol=FEAS_TOL):
    """Round a point of conv(system) to an integer member of the system.

    The membership assertion after rounding is the executable form of the
    hull-rounding guarantee; its failure means q was not in conv(system).
    """
    if not system.contains_relaxed(q, tol):
        raise ContractError("point violates the relaxed constraints")
    r = round_ties_down(q)
    if not system.contains(r):
        raise InvariantViolationError(
            "rounded point left the system; input was outside the hull")
    return r


def projection_distance(system, p_hat):
    """Convenience: (projection, its signed-infinity distance from p_hat)."""
    proj = project_general(system, p_hat)
    diff = [a - _as_fraction(b) for a, b in zip(proj, p_hat)]
    return proj, linf_pm_norm(diff)[2]
