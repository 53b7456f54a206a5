"""Experiment harness: warm-start sweeps, learning runs, CSV and figures.

Reports are flat CSV files (LF endings, frozen header) written in
deterministic (k, trial) order; alongside each CSV the harness renders a
matplotlib figure summarizing the run. Timing columns are the only
nondeterministic bytes.
"""

import csv
import io
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import generate, learning
from .core import (
    brute_force_local_oracle,
    linf_pm_norm,
    round_ties_down,
    steepest_descent,
    vec_sub,
)
from .energy import solve_energy
from .errors import ContractError, InvariantViolationError
from .lnatset import project_general, round_into
from .matching import DualPair, solve_matching, verify_matching_result
from .matroid import solve_matroid_intersection

SWEEP_HEADER = ["problem", "seed", "k", "trial", "pred_linf_err",
                "start_dist_pm", "iterations", "oracle_calls", "wall_us"]
LEARN_HEADER = ["round", "loss", "cum_loss"]

KINDS = ("matching", "matroid", "energy", "generic")


@dataclass
class ExperimentConfig:
    kind: str
    n: int
    seed: int = 0
    k_list: tuple = (0, 1, 2, 4, 8, 16)
    trials: int = 20
    step_rule: str = "long"
    out_dir: str = "."
    noise: str = "int"          # "int" (exact bound) or "real"
    rounds: int = 100           # learning horizon T
    box_c: float = None         # learner box radius; defaulted per kind
    holdout: int = 20           # held-out instances for the A/B comparison
    weight_offset: int = 0      # shifts the base instance's weights (learning)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractError(f"unknown problem kind {self.kind!r}")
        if any(k < 0 for k in self.k_list):
            raise ContractError("perturbation magnitudes must be >= 0")


@dataclass
class SweepRecord:
    problem: str
    seed: int
    k: int
    trial: int
    pred_linf_err: float
    start_dist_pm: int
    iterations: int
    oracle_calls: int
    wall_us: int

    def row(self):
        return [self.problem, self.seed, self.k, self.trial,
                self.pred_linf_err, self.start_dist_pm, self.iterations,
                self.oracle_calls, self.wall_us]


class _Adapter:
    """Uniform view of one problem family for the sweep: build an instance,
    solve from a prediction vector, and expose the target vector."""

    def __init__(self, kind, n, seed):
        self.kind = kind
        self.n = n
        self.seed = seed

    def build(self, trial):
        kind, n, seed = self.kind, self.n, self.seed
        if kind == "matching":
            inst = generate.gen_matching(n, seed * 1000 + trial)
            dim = n
        elif kind == "matroid":
            inst = generate.gen_matroid(n, seed * 1000 + trial)
            dim = n
        elif kind == "energy":
            inst = generate.gen_energy(n, seed * 1000 + trial, labels=3)
            dim = n
        else:
            inst = generate.gen_generic(n, seed * 1000 + trial)
            dim = n
        return inst, dim

    def solve(self, inst, prediction, step_rule):
        """Returns (target_vector, iterations, oracle_calls)."""
        if self.kind == "matching":
            k = inst.k
            p_hat = None if prediction is None else DualPair(
                tuple(prediction[:k]), tuple(prediction[k:]))
            res = solve_matching(inst, p_hat, step_rule=step_rule)
            if not verify_matching_result(inst, res)["verified"]:
                raise InvariantViolationError("matching certificate failed")
            return res.dual.s + res.dual.t, res.trace.iterations, res.trace.local_calls
        if self.kind == "matroid":
            res = solve_matroid_intersection(inst, prediction, step_rule=step_rule)
            return res.dual, res.trace.iterations, res.trace.oracle_calls
        if self.kind == "energy":
            res = solve_energy(inst, prediction,
                               step_rule="unit" if step_rule == "unit" else "long")
            return res.labeling, res.trace.iterations, res.trace.local_calls
        g, energy_inst = inst
        system = energy_inst.system
        if prediction is None:
            prediction = (0,) * self.n
        q = project_general(system, prediction)
        p0 = round_into(system, q)
        p_final, trace = steepest_descent(g, p0, brute_force_local_oracle,
                                          step_rule="long")
        return p_final, trace.iterations, trace.local_calls


def _noise_vector(rng, dim, k, noise):
    if k == 0:
        return np.zeros(dim)
    if noise == "int":
        return rng.integers(-k, k + 1, size=dim).astype(float)
    return rng.uniform(-k, k, size=dim)


def run_warmstart_sweep(config):
    """Cold-solve each trial instance for its target, perturb the target by
    +-k per coordinate, re-solve warm, and record one row per (k, trial).

    Every row is checked against the descent bound
    iterations <= start_dist_pm + 1 before it is accepted.
    """
    adapter = _Adapter(config.kind, config.n, config.seed)
    cold = {}
    for trial in range(config.trials):
        inst, dim = adapter.build(trial)
        target, _, _ = adapter.solve(inst, None, config.step_rule)
        cold[trial] = (inst, dim, tuple(target))

    def one(k, trial):
        inst, dim, target = cold[trial]
        rng = np.random.default_rng([config.seed, k, trial])
        noise = _noise_vector(rng, dim, k, config.noise)
        prediction = tuple(t + x for t, x in zip(target, noise))
        start = round_ties_down(_projected(adapter, inst, prediction))
        t0 = time.perf_counter_ns()
        _, iters, calls = adapter.solve(inst, prediction, config.step_rule)
        wall = (time.perf_counter_ns() - t0) // 1000
        err = max(abs(x) for x in noise) if len(noise) else 0.0
        dist = linf_pm_norm(vec_sub(start, target))[2]
        rec = SweepRecord(config.kind, config.seed, k, trial, float(err),
                          int(dist), iters, calls, wall)
        if rec.iterations > rec.start_dist_pm + 1:
            raise InvariantViolationError(
                f"iteration bound violated on row {rec.row()}")
        return rec

    jobs = [(k, t) for k in config.k_list for t in range(config.trials)]
    threads = int(os.environ.get("DCWARM_THREADS", "1"))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda kt: one(*kt), jobs))
    else:
        results = [one(*kt) for kt in jobs]
    records = sorted(results, key=lambda r: (r.k, r.trial))

    os.makedirs(config.out_dir, exist_ok=True)
    csv_path = os.path.join(config.out_dir,
                            f"sweep_{config.kind}_n{config.n}_s{config.seed}.csv")
    _write_csv(csv_path, SWEEP_HEADER, [r.row() for r in records])
    fig_path = csv_path[:-4] + ".png"
    render_sweep_figure(records, fig_path)
    return records, csv_path, fig_path


def _projected(adapter, inst, prediction):
    """Initial point the warm solver will start from, for the distance column."""
    if adapter.kind == "matching":
        from .matching import project_dual
        k = inst.k
        p = project_dual(inst, DualPair(tuple(prediction[:k]), tuple(prediction[k:])))
        return p.s + p.t
    if adapter.kind == "matroid":
        return prediction
    if adapter.kind == "energy":
        from .lnatset import project_box
        sys_ = inst.system
        if inst.has_difference_constraints:
            return project_general(sys_, prediction)
        return project_box(sys_.alpha, sys_.beta, prediction)
    _, energy_inst = inst
    return project_general(energy_inst.system, prediction)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(buf.getvalue())
    return path


def render_sweep_figure(records, path):
    ks = sorted({r.k for r in records})
    means = [np.mean([r.iterations for r in records if r.k == k]) for k in ks]
    maxes = [max(r.iterations for r in records if r.k == k) for k in ks]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ks, means, "o-", label="mean iterations")
    ax.plot(ks, maxes, "s--", label="max iterations")
    ax.plot(ks, [4 * k + 2 for k in ks], ":", color="gray", label="4k + 2 bound")
    ax.set_xlabel("prediction error bound k")
    ax.set_ylabel("descent iterations")
    ax.set_title(f"warm-start scaling ({records[0].problem})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def default_box_radius(kind, inst, n):
    """Worst-case box radius recommendations guaranteeing an optimal dual in
    the box: n*max|w| for matching, r*max|w| for matroid intersection, the
    label range for energies."""
    if kind == "matching":
        return n * max(abs(w) for _, _, w in inst.edges)
    if kind == "matroid":
        return inst.r * max(abs(w) for w in inst.w)
    if kind == "energy":
        return max(max(abs(lo), abs(hi)) for lo, hi in inst.boxes)
    return 8


def practical_box_radius(kind, inst):
    """Box radius sized to typical targets so the fixed-horizon step size is
    usable at short horizons; the worst-case recommendation stays available
    through :func:`default_box_radius` and the experiment summary."""
    if kind == "matching":
        return 2 * max(abs(w) for _, _, w in inst.edges) + 2
    if kind == "matroid":
        return 2 * max(abs(w) for w in inst.w) + 2
    if kind == "energy":
        return max(max(abs(lo), abs(hi)) for lo, hi in inst.boxes)
    return 8


def _offset_weights(kind, base_json, offset):
    obj = dict(base_json)
    if kind == "matching":
        obj["edges"] = [[u, v, w + offset] for u, v, w in obj["edges"]]
    elif kind == "matroid":
        obj["w"] = [w + offset for w in obj["w"]]
    return obj


def _shifted_instance(kind, base_json, rng):
    """Random weight shift of a base instance (same ground set)."""
    obj = dict(base_json)
    if kind == "matching":
        edges = [[u, v, int(w + rng.integers(-2, 3))] for u, v, w in obj["edges"]]
        obj = dict(obj, edges=edges)
    elif kind == "matroid":
        obj = dict(obj, w=[int(w + rng.integers(-2, 3)) for w in obj["w"]])
    elif kind == "energy":
        # add a convex bump so tables stay discretely convex
        unary = []
        for table in obj["unary"]:
            c = int(rng.integers(0, len(table)))
            unary.append([v + abs(idx - c) for idx, v in enumerate(table)])
        obj = dict(obj, unary=unary)
    return generate.load_instance(obj)


def run_learning_experiment(config):
    """Online learning over a stream of weight-shifted instances.

    Each round solves the shifted instance cold for its target, feeds the
    learner, and records the loss. The summary reports the regret against
    the observed targets plus their mid-range, the theoretical bound, and a
    held-out A/B comparison of solver iterations warm-started from the
    learned prediction versus the zero prediction.
    """
    kind = config.kind
    if kind == "generic":
        raise ContractError("learning experiment supports matching/matroid/energy")
    adapter = _Adapter(kind, config.n, config.seed)
    base_inst, dim = adapter.build(0)
    base_json = base_inst.to_json()
    if config.weight_offset:
        base_json = _offset_weights(kind, base_json, config.weight_offset)
        base_inst = generate.load_instance(base_json)
    C = config.box_c or practical_box_radius(kind, base_inst)

    rng = np.random.default_rng([config.seed, 77])
    state = learning.make_learner(dim, C, config.rounds)
    rows = []
    insts = []
    for t in range(1, config.rounds + 1):
        inst = _shifted_instance(kind, base_json, rng)
        insts.append(inst)
        target, _, _ = adapter.solve(inst, None, config.step_rule)
        learning.ogd_step(state, target)
        loss = state.history[-1][2]
        rows.append([t, float(loss), float(sum(h[2] for h in state.history))])

    targets = np.array([h[1] for h in state.history])
    clip = lambda v: np.clip(v, -C, C)
    comparators = [clip(t) for t in targets]
    mid = clip((targets.max(axis=0) + targets.min(axis=0)) / 2.0)
    comparators.append(mid)
    max_regret, _ = learning.regret_eval(state.history, comparators, C=C)
    bound = learning.regret_bound(C, dim, config.rounds)

    learned = learning.learn_batch(targets, C)
    warm_iters, zero_iters = [], []
    for h in range(config.holdout):
        inst = _shifted_instance(kind, base_json, rng)
        _, it_w, _ = adapter.solve(inst, tuple(learned), config.step_rule)
        _, it_z, _ = adapter.solve(inst, None, config.step_rule)
        warm_iters.append(it_w)
        zero_iters.append(it_z)

    summary = {
        "kind": kind, "n": config.n, "seed": config.seed, "rounds": config.rounds,
        "C": float(C),
        "worst_case_box_radius": float(default_box_radius(kind, base_inst, config.n)),
        "max_regret": float(max_regret), "regret_bound": float(bound),
        "regret_ok": bool(max_regret <= bound),
        "learned_mean_iterations": float(np.mean(warm_iters)),
        "zero_mean_iterations": float(np.mean(zero_iters)),
    }
    os.makedirs(config.out_dir, exist_ok=True)
    csv_path = os.path.join(config.out_dir,
                            f"learn_{kind}_n{config.n}_s{config.seed}.csv")
    _write_csv(csv_path, LEARN_HEADER, rows)
    fig_path = csv_path[:-4] + ".png"
    render_learning_figure(rows, summary, fig_path)
    return rows, summary, csv_path, fig_path


def render_learning_figure(rows, summary, path):
    rounds = [r[0] for r in rows]
    losses = [r[1] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(rounds, losses, lw=0.9)
    ax1.set_xlabel("round")
    ax1.set_ylabel("prediction loss")
    ax1.set_title(f"per-round loss ({summary['kind']}, n={summary['n']})")
    cum = np.cumsum(losses)
    horizon = np.arange(1, len(rows) + 1)
    ax2.plot(horizon, cum, label="cumulative loss")
    ax2.plot(horizon, summary["C"] * np.sqrt(2 * summary["n"] * horizon),
             ":", color="gray", label="C sqrt(2nT)")
    ax2.set_xlabel("round")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
