"""Acceptance suite: one test per criterion, each printing a PASS line with
its runtime. Tolerances are pinned here and nowhere else."""

import itertools
import math
import time

import numpy as np

from dcwarm.core import (
    brute_force_local_oracle,
    lexicographic_minimizer,
    linf_pm_norm,
    round_ties_down,
    steepest_descent,
)
from dcwarm.energy import (
    brute_force_energy,
    build_cut_graph,
    energy_local_direction,
    energy_value,
    solve_energy,
)
from dcwarm.generate import gen_energy, gen_generic, gen_matching, gen_matroid
from dcwarm.harness import ExperimentConfig, run_warmstart_sweep
from dcwarm.learning import make_learner, ogd_step, regret_bound, regret_eval
from dcwarm.lnatset import (
    LNatSystem,
    project_box,
    project_general,
    projection_distance,
    round_into,
)
from dcwarm.matching import (
    DualPair,
    brute_force_matching,
    dual_to_min_form,
    path_cost_instance,
    project_dual,
    solve_matching,
    verify_matching_result,
)
from dcwarm.matroid import (
    brute_force_matroid,
    dual_value,
    matroid_local_direction,
    normalized_dual_norm,
    solve_matroid_intersection,
    tight_instance,
    tight_instance_base,
    tight_witness_dual,
)


def report(num, description, t0, budget=None):
    elapsed = time.monotonic() - t0
    line = f"[PASS] criterion {num}: {description} ({elapsed:.1f}s)"
    print("\n" + line)
    if budget is not None:
        assert elapsed < budget, f"criterion {num} exceeded {budget}s budget"


def pm_dist(a, b):
    return linf_pm_norm([x - y for x, y in zip(a, b)])[2]


class TestAcceptance:
    def test_criterion_1_iteration_bound(self):
        """iterations <= ||p*_ref - p0||_pm + 1, exactly, over >= 200 solves."""
        t0 = time.monotonic()
        rng = np.random.default_rng(1001)
        solves = 0

        def check(iterations, start, star):
            nonlocal solves
            solves += 1
            assert iterations <= pm_dist(star, start) + 1

        # matching: certificate-verified terminal dual is the reference
        for idx, n in enumerate([8, 16, 24, 32, 40] * 4):
            inst = gen_matching(n, 50 + idx)
            preds = [None] + [tuple(rng.integers(-k, k + 1, size=inst.n))
                              for k in (3, 8)]
            for pred in preds:
                p_hat = None if pred is None else DualPair(
                    pred[:inst.k], pred[inst.k:])
                res = solve_matching(inst, p_hat)
                assert verify_matching_result(inst, res)["verified"]
                start = project_dual(
                    inst, p_hat or DualPair((0,) * inst.k, (0,) * inst.k))
                check(res.trace.iterations, start.s + start.t,
                      res.dual.s + res.dual.t)

        # matroid: weight-splitting certificate verifies the terminal dual
        for idx in range(20):
            n = [6, 8, 10, 12][idx % 4]
            inst = gen_matroid(n, 60 + idx)
            for k in (0, 2, 6):
                p_hat = tuple(int(x) for x in rng.integers(-k, k + 1, size=n)) \
                    if k else (0,) * n
                res = solve_matroid_intersection(inst, p_hat)
                assert dual_value(inst, res.dual) == res.weight
                assert inst.m1._indep(res.base) and inst.m2._indep(res.base)
                assert len(res.base) == inst.r
                check(res.trace.iterations, round_ties_down(p_hat), res.dual)

        # energy: exhaustive canonical argmin is the reference
        for idx, n in enumerate([4, 5, 6, 7, 8] * 4 + [10] * 5):
            inst = gen_energy(n, 70 + idx, labels=3)
            best, argmin = brute_force_energy(inst)
            sys_ = inst.system
            for k in (0, 4):
                p_hat = tuple(a + int(x) for a, x in
                              zip(argmin, rng.integers(-k, k + 1, size=n))) \
                    if k else argmin
                res = solve_energy(inst, p_hat)
                assert res.value == best
                if inst.has_difference_constraints:
                    start = round_into(sys_, project_general(sys_, p_hat))
                else:
                    start = round_into(
                        sys_, project_box(sys_.alpha, sys_.beta, p_hat))
                check(res.trace.iterations, start, argmin)

        # generic: brute-force local oracle plus exhaustive argmin
        for idx, n in enumerate([3, 4, 5, 6] * 4 + [8, 8, 10, 10]):
            g, ei = gen_generic(n, 80 + idx)
            star, best = lexicographic_minimizer(g, ei.system)
            for k in (int(rng.integers(0, 3)), int(rng.integers(3, 6))):
                p_hat = tuple(a + int(x) for a, x in
                              zip(star, rng.integers(-k, k + 1, size=n)))
                p0 = round_into(ei.system, project_general(ei.system, p_hat))
                p_final, trace = steepest_descent(g, p0, brute_force_local_oracle)
                assert g.fn(p_final) == best
                check(trace.iterations, p0, star)

        assert solves >= 200
        report(1, f"iteration bound exact on {solves} solves", t0, budget=60)

    def test_criterion_2_warmstart_scaling(self, tmp_path):
        """matching sweep n=40: every row <= 4k + 2; k=0 rows <= 2."""
        t0 = time.monotonic()
        config = ExperimentConfig(kind="matching", n=40, seed=7,
                                  k_list=(0, 1, 2, 4, 8, 16), trials=20,
                                  out_dir=str(tmp_path))
        records, _, _ = run_warmstart_sweep(config)
        assert len(records) == 120
        for rec in records:
            assert rec.iterations <= 4 * rec.k + 2
            if rec.k == 0:
                assert rec.iterations <= 2
        report(2, "sweep rows obey 4k+2 (k=0 rows <= 2)", t0, budget=10)

    def test_criterion_3_oracle_equivalence(self):
        """solver optimum == brute-force optimum, zero tolerance."""
        t0 = time.monotonic()
        rng = np.random.default_rng(1003)
        for idx in range(100):
            n = 2 * int(rng.integers(2, 7))
            inst = gen_matching(n, 3000 + idx)
            res = solve_matching(inst)
            assert res.weight == brute_force_matching(inst)[0]
        for idx in range(50):
            n = int(rng.integers(4, 11))
            inst = gen_matroid(n, 4000 + idx)
            res = solve_matroid_intersection(inst)
            assert res.weight == brute_force_matroid(inst)[0]
        for idx in range(50):
            n = int(rng.integers(2, 7))
            labels = int(rng.integers(2, 6))
            inst = gen_energy(n, 5000 + idx, labels=labels,
                              windowed=bool(idx % 3 == 0))
            res = solve_energy(inst)
            assert res.value == brute_force_energy(inst)[0]
        report(3, "200 solver optima equal brute force exactly", t0, budget=30)

    def test_criterion_4_projection_optimality(self):
        """projection distance within 1e-9 of the grid minimum; matching
        shift matches the general projection distance."""
        t0 = time.monotonic()
        rng = np.random.default_rng(1004)
        produced = 0
        while produced < 100:
            n = int(rng.integers(2, 4))
            lo = [int(x) for x in rng.integers(-2, 1, size=n)]
            hi = [l + int(rng.integers(1, 4)) for l in lo]
            gamma = {}
            for _ in range(int(rng.integers(0, 4))):
                i, j = (int(x) for x in rng.integers(0, n, size=2))
                if i != j:
                    gamma[(i, j)] = int(rng.integers(-1, 4))
            try:
                system = LNatSystem(n, lo, hi, gamma)
            except Exception:
                continue
            produced += 1
            p_hat = [float(x) for x in rng.uniform(-5, 5, size=n)]
            proj, dist = projection_distance(system, p_hat)
            assert system.contains_relaxed(proj)
            axes = [np.arange(l, h + 0.125, 0.25) for l, h in zip(lo, hi)]
            grid_best = min(
                (linf_pm_norm([z - q for z, q in zip(zs, p_hat)])[2]
                 for zs in itertools.product(*axes)
                 if system.contains_relaxed(zs, 0)),
                default=None)
            assert grid_best is not None
            assert float(dist) <= grid_best + 1e-9

        for idx in range(50):
            inst = gen_matching(2 * int(rng.integers(1, 5)), 6000 + idx)
            k = inst.k
            p_hat = [float(x) for x in rng.uniform(-8, 8, size=inst.n)]
            eps = max(w - p_hat[i] + p_hat[k + j] for i, j, w in inst.edges)
            shift_dist = max(0.0, eps)
            gamma = {(i, k + j): -w for i, j, w in inst.edges}
            system = LNatSystem(inst.n, gamma=gamma)
            _, dist = projection_distance(system, p_hat)
            assert abs(float(dist) - shift_dist) <= 1e-9
        report(4, "projection distances optimal (grid + shift lemma)", t0)

    def test_criterion_5_rounding_feasibility(self):
        """1000 random hull points round into their systems, zero failures."""
        t0 = time.monotonic()
        rng = np.random.default_rng(1005)
        done = 0
        while done < 1000:
            n = int(rng.integers(1, 7))
            lo = [int(x) for x in rng.integers(-3, 1, size=n)]
            hi = [l + int(rng.integers(0, 4)) for l in lo]
            gamma = {}
            for _ in range(int(rng.integers(0, n))):
                i, j = (int(x) for x in rng.integers(0, n, size=2))
                if i != j:
                    gamma[(i, j)] = int(rng.integers(-1, 4))
            try:
                system = LNatSystem(n, lo, hi, gamma)
            except Exception:
                continue
            pts = [p for p in itertools.product(
                *[range(l, h + 1) for l, h in zip(lo, hi)])
                if system.contains(p)]
            if not pts:
                continue
            k = min(len(pts), int(rng.integers(1, 4)))
            chosen = [pts[i] for i in rng.choice(len(pts), size=k, replace=False)]
            weights = rng.random(k)
            weights /= weights.sum()
            combo = [float(sum(w * p[i] for w, p in zip(weights, chosen)))
                     for i in range(n)]
            assert system.contains(round_into(system, combo, tol=1e-7))
            done += 1
        report(5, "1000 hull points rounded into their systems", t0)

    def test_criterion_6_regret_bound(self):
        """regret <= C*sqrt(2nT) for every comparator, seed, and sequence."""
        t0 = time.monotonic()
        T = 1000
        for n in (1, 5, 20):
            for C in (1.0, 10.0):
                for seed in range(10):
                    for adversarial in (False, True):
                        rng = np.random.default_rng([seed, n, int(C), adversarial])
                        state = make_learner(n, C, T)
                        targets = []
                        for t in range(T):
                            if adversarial:
                                center = -0.6 * C if t < T // 2 else 0.6 * C
                                tgt = np.clip(center + rng.uniform(
                                    -0.4 * C, 0.4 * C, size=n), -C, C)
                            else:
                                tgt = rng.uniform(-C, C, size=n)
                            targets.append(tgt)
                            ogd_step(state, tgt)
                        comparators = [targets[i] for i in
                                       rng.choice(T, size=8, replace=False)]
                        stacked = np.array(targets)
                        comparators += [
                            (stacked.max(axis=0) + stacked.min(axis=0)) / 2,
                            np.zeros(n), np.full(n, C), np.full(n, -C)]
                        max_regret, _ = regret_eval(state.history, comparators, C=C)
                        assert max_regret <= regret_bound(C, n, T)
        report(6, "regret within C*sqrt(2nT) on the full grid", t0, budget=60)

    def test_criterion_7_tight_matroid_family(self):
        """unique common base found; normalized dual norm >= r*W with an
        exactly-r*W witness verified optimal."""
        t0 = time.monotonic()
        for n in (5, 9):
            for W in (1, 3):
                inst = tight_instance(n, W)
                r = inst.r
                res = solve_matroid_intersection(inst)
                assert res.base == tight_instance_base(n)
                assert normalized_dual_norm(inst, res.dual) >= r * W
                witness = tight_witness_dual(n, W)
                assert dual_value(inst, witness) == res.weight
                _, improvement, cert = matroid_local_direction(inst, witness)
                assert improvement == 0 and cert == r
                assert normalized_dual_norm(inst, witness) == r * W
        report(7, "tight family: norm >= rW with an rW witness", t0)

    def test_criterion_8_path_counterexample(self):
        """converted dual of the path instance satisfies the chained
        inequality, so no uniform shift brings it inside [-C, C]."""
        t0 = time.monotonic()
        for C in (3, 5, 11):
            inst = path_cost_instance(8, C)
            res = solve_matching(inst)
            assert verify_matching_result(inst, res)["verified"]
            y = dual_to_min_form(inst, res.dual)
            for i in (1, 3, 5):
                assert y[i] >= y[i + 2] + C
            assert y[1] >= y[7] + 3 * C
            # max(|y1 + c|, |y7 + c|) >= (y1 - y7)/2 >= 1.5C for every shift c
            assert (y[1] - y[7]) / 2 > C
        report(8, "path dual chained inequality certifies ||y||_inf > C", t0)

    def test_criterion_9_cut_construction(self):
        """cut graphs stay within n+2 nodes / 3m+n arcs; cut direction equals
        enumeration up to n = 12."""
        t0 = time.monotonic()
        rng = np.random.default_rng(1009)
        for idx in range(40):
            n = int(rng.integers(2, 13))
            inst = gen_energy(n, 9000 + idx, labels=3,
                              windowed=bool(idx % 2))
            res = solve_energy(inst)
            points = {res.labeling}
            lo = tuple(b[0] for b in inst.boxes)
            if energy_value(inst, lo) < math.inf:
                points.add(lo)
            for p in points:
                for sign in (1, -1):
                    graph = build_cut_graph(inst, p, sign)
                    assert graph.num_nodes == inst.n + 2
                    assert len(graph.arcs) <= 3 * inst.m + inst.n
                d, improvement = energy_local_direction(inst, p)
                base = energy_value(inst, p)
                best = 0
                for bits in itertools.product((0, 1), repeat=n):
                    for sign in (1, -1):
                        q = tuple(a + sign * b for a, b in zip(p, bits))
                        best = min(best, energy_value(inst, q) - base)
                assert improvement == best
        report(9, "cut graphs within bounds; directions equal enumeration", t0)
