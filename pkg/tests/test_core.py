import math

import pytest
from hypothesis import given, strategies as st

from dcwarm.core import (
    Neighborhood,
    Objective,
    brute_force_local_oracle,
    lexicographic_minimizer,
    linf_norm,
    linf_pm_norm,
    long_step_length,
    round_ties_down,
    steepest_descent,
)
from dcwarm.errors import (
    CapacityError,
    ContractError,
    DivergenceError,
    InfeasibleStartError,
    UnboundedDirectionError,
)
from dcwarm.lnatset import LNatSystem

ints = st.integers(min_value=-10 ** 6, max_value=10 ** 6)
vecs = st.lists(ints, min_size=1, max_size=8)


class TestNorm:
    def test_zero_vector(self):
        assert linf_pm_norm((0, 0, 0)) == (0, 0, 0)

    def test_mixed_signs(self):
        assert linf_pm_norm((3, -1)) == (3, 1, 4)

    def test_no_negative_part(self):
        assert linf_pm_norm((2, 1)) == (2, 0, 2)

    @given(vecs)
    def test_sandwich(self, p):
        total = linf_pm_norm(p)[2]
        assert linf_norm(p) <= total <= 2 * linf_norm(p)

    @given(vecs, vecs)
    def test_triangle_inequality(self, a, b):
        n = min(len(a), len(b))
        a, b = a[:n], b[:n]
        s = [x + y for x, y in zip(a, b)]
        assert linf_pm_norm(s)[2] <= linf_pm_norm(a)[2] + linf_pm_norm(b)[2]

    @given(vecs, st.integers(min_value=-5, max_value=5))
    def test_homogeneity(self, p, c):
        scaled = [c * x for x in p]
        assert linf_pm_norm(scaled)[2] == abs(c) * linf_pm_norm(p)[2]


class TestRounding:
    @pytest.mark.parametrize("x,expected", [
        (0.5, 0), (1.49, 1), (-0.5, -1), (2.5, 2), (-1.5, -2), (0.51, 1), (3, 3),
    ])
    def test_ties_down(self, x, expected):
        assert round_ties_down((x,)) == (expected,)

    @given(vecs)
    def test_idempotent_on_integers(self, p):
        assert round_ties_down(p) == tuple(p)

    def test_overflow(self):
        with pytest.raises(OverflowError):
            round_ties_down((float(2 ** 41),))


def abs_objective(n):
    return Objective(lambda p: sum(abs(x) for x in p), n, kind="lnat")


class TestLongStep:
    def test_linear_until_zero(self):
        g = Objective(lambda p: abs(p[0]), 1, kind="lnat")
        assert long_step_length(g, (5,), (-1,)) == 5

    def test_strictly_convex_stops_at_one(self):
        g = Objective(lambda p: p[0] * p[0], 1, kind="lnat")
        assert long_step_length(g, (3,), (-1,)) == 1

    def test_non_improving_rejected(self):
        g = Objective(lambda p: max(0, -p[0]), 1, kind="lnat")
        with pytest.raises(ContractError):
            long_step_length(g, (5,), (-1,))

    def test_unbounded_direction(self):
        g = Objective(lambda p: -p[0], 1, kind="l")
        with pytest.raises(UnboundedDirectionError):
            long_step_length(g, (0,), (1,), cap=2 ** 12)


class TestBruteForceLocalOracle:
    def test_optimal_returns_zero(self):
        g = abs_objective(2)
        d, val = brute_force_local_oracle(g, (0, 0), Neighborhood.PLUS_MINUS)
        assert d == (0, 0) and val == 0

    def test_plus_neighborhood_full_support(self):
        def f(p):
            if all(0 <= x <= 1 for x in p):
                return -(p[0] + p[1])
            return math.inf
        g = Objective(f, 2, kind="l")
        d, val = brute_force_local_oracle(g, (0, 0), Neighborhood.PLUS)
        assert d == (1, 1) and val == -2

    def test_lexicographic_tie_break(self):
        # both singletons improve equally; smallest support wins
        g = Objective(lambda p: -max(p), 2, kind="lnat")
        d, _ = brute_force_local_oracle(g, (0, 0), Neighborhood.PLUS)
        assert d == (1, 0)

    def test_plus_before_minus(self):
        g = Objective(lambda p: -abs(p[0]), 1, kind="lnat")
        d, _ = brute_force_local_oracle(g, (0,), Neighborhood.PLUS_MINUS)
        assert d == (1,)

    def test_capacity(self):
        g = abs_objective(23)
        with pytest.raises(CapacityError):
            brute_force_local_oracle(g, (0,) * 23, Neighborhood.PLUS_MINUS)


class TestSteepestDescent:
    def test_start_at_optimum_single_iteration(self):
        g = abs_objective(2)
        p, trace = steepest_descent(g, (0, 0))
        assert p == (0, 0)
        assert trace.iterations == 1
        assert trace.records[-1].step == 0

    def test_long_step_reaches_origin(self):
        g = abs_objective(2)
        p, trace = steepest_descent(g, (3, 0), step_rule="long")
        assert p == (0, 0)
        assert trace.iterations <= 4  # distance 3 plus the final check

    def test_unit_and_long_same_value(self):
        g = abs_objective(3)
        p_long, _ = steepest_descent(g, (3, -2, 1), step_rule="long")
        p_unit, _ = steepest_descent(g, (3, -2, 1), step_rule="unit")
        assert g.fn(p_long) == g.fn(p_unit) == 0

    def test_linear_over_bounded_domain_matches_enumeration(self):
        system = LNatSystem(2, alpha=(0, 0), beta=(3, 3), gamma={(0, 1): 1})

        def f(p):
            return p[0] - 2 * p[1] if system.contains(p) else math.inf

        g = Objective(f, 2, kind="lnat")
        p, _ = steepest_descent(g, (2, 2))
        best, best_val = lexicographic_minimizer(g, system)
        assert f(p) == best_val

    def test_infeasible_start(self):
        g = Objective(lambda p: math.inf, 1, kind="lnat")
        with pytest.raises(InfeasibleStartError):
            steepest_descent(g, (0,))

    def test_divergence_guard(self):
        g = Objective(lambda p: abs(p[0]), 1, kind="lnat")
        with pytest.raises(DivergenceError):
            steepest_descent(g, (10,), step_rule="unit", max_iter=3)

    def test_objective_strictly_decreases(self):
        g = abs_objective(3)
        _, trace = steepest_descent(g, (5, -4, 2), step_rule="unit")
        values = [r.value for r in trace.records]
        for prev, cur in zip(values, values[1:-1]):
            assert cur < prev
        assert values[-1] == values[-2]  # terminal check repeats the last value


class TestLexicographicMinimizer:
    def test_constant_ties(self):
        system = LNatSystem(2, alpha=(0, 0), beta=(0, 1))
        g = Objective(lambda p: 7, 2, kind="lnat")
        assert lexicographic_minimizer(g, system)[0] == (0, 0)

    def test_unique_minimizer(self):
        system = LNatSystem(1, alpha=(0,), beta=(3,))
        g = Objective(lambda p: abs(p[0] - 1), 1, kind="lnat")
        assert lexicographic_minimizer(g, system) == ((1,), 0)

    def test_capacity(self):
        system = LNatSystem(8, alpha=(0,) * 8, beta=(30,) * 8)
        g = abs_objective(8)
        with pytest.raises(CapacityError):
            lexicographic_minimizer(g, system, capacity=10 ** 4)


class TestIterationBound:
    def test_bound_against_every_optimum(self):
        # random bounded separable-convex objectives, every optimum enumerated
        import numpy as np
        rng = np.random.default_rng(11)
        for trial in range(30):
            n = int(rng.integers(2, 5))
            lo = [int(rng.integers(-2, 1)) for _ in range(n)]
            hi = [l + int(rng.integers(1, 4)) for l in lo]
            centers = [int(rng.integers(l, h + 1)) for l, h in zip(lo, hi)]
            weights = [int(rng.integers(1, 4)) for _ in range(n)]
            system = LNatSystem(n, alpha=lo, beta=hi)

            def f(p, c=tuple(centers), w=tuple(weights), s=system):
                if not s.contains(p):
                    return math.inf
                return sum(wi * abs(x - ci) for wi, x, ci in zip(w, p, c))

            g = Objective(f, n, kind="lnat")
            p0 = tuple(int(rng.integers(l, h + 1)) for l, h in zip(lo, hi))
            rule = "long" if trial % 2 else "unit"
            p_final, trace = steepest_descent(g, p0, step_rule=rule)
            _, best_val = lexicographic_minimizer(g, system)
            assert f(p_final) == best_val
            # enumerate the full argmin set
            optima = []
            from itertools import product
            for pt in product(*[range(l, h + 1) for l, h in zip(lo, hi)]):
                if f(pt) == best_val:
                    optima.append(pt)
            for opt in optima:
                diff = [a - b for a, b in zip(opt, p0)]
                assert trace.iterations <= linf_pm_norm(diff)[2] + 1
