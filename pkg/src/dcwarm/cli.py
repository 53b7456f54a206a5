"""Command-line interface.

Subcommands: gen, solve, project, warmstart-sweep, learn. Exit codes:
0 success, 1 usage error, 2 solver error.
"""

import argparse
import json
import sys

from . import generate, harness
from .core import linf_pm_norm
from .energy import energy_value, solve_energy
from .errors import DcwarmError
from .lnatset import LNatSystem, project_general, round_into
from .matching import DualPair, solve_matching, verify_matching_result
from .matroid import dual_value, solve_matroid_intersection


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # report usage problems through the exit-code contract instead of SystemExit
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="dcwarm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate an instance file")
    p_gen.add_argument("--kind", required=True,
                       choices=["matching", "matroid", "energy"])
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--weight", type=int, default=None,
                       help="weight range (tight family: the scale W)")
    p_gen.add_argument("--family", default="random",
                       help="matroid family: random | tight")
    p_gen.add_argument("--fixture", default=None, help="energy fixture name")
    p_gen.add_argument("--out", required=True)

    p_solve = sub.add_parser("solve", help="solve an instance, optionally warm")
    p_solve.add_argument("--instance", required=True)
    p_solve.add_argument("--prediction", default=None)
    p_solve.add_argument("--step", choices=["unit", "long"], default="long")
    p_solve.add_argument("--format", choices=["json", "csv"], default="json")

    p_proj = sub.add_parser("project", help="project a point onto a system")
    p_proj.add_argument("--instance", required=True,
                        help="constraint-system JSON file")
    p_proj.add_argument("--point", required=True, help='JSON file {"p": [...]}')

    p_sweep = sub.add_parser("warmstart-sweep", help="perturbation sweep")
    p_sweep.add_argument("--kind", required=True, choices=list(harness.KINDS))
    p_sweep.add_argument("--n", type=int, required=True)
    p_sweep.add_argument("--k", default="0,1,2,4,8,16",
                         help="comma-separated perturbation magnitudes")
    p_sweep.add_argument("--trials", type=int, default=20)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--step", choices=["unit", "long"], default="long")
    p_sweep.add_argument("--noise", choices=["int", "real"], default="int")
    p_sweep.add_argument("--out", default=".")

    p_learn = sub.add_parser("learn", help="online learning experiment")
    p_learn.add_argument("--kind", required=True,
                         choices=["matching", "matroid", "energy"])
    p_learn.add_argument("--n", type=int, required=True)
    p_learn.add_argument("--rounds", type=int, default=100)
    p_learn.add_argument("--seed", type=int, default=0)
    p_learn.add_argument("--box", type=float, default=None,
                         help="learner box radius C")
    p_learn.add_argument("--out", default=".")
    return parser


def _load_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}") from exc


def _solve_any(obj, prediction, step):
    kind = obj.get("type")
    if kind == "matching":
        inst = generate.load_instance(obj)
        p_hat = None
        if prediction is not None:
            p_hat = DualPair(tuple(prediction["s"]), tuple(prediction["t"]))
        res = solve_matching(inst, p_hat, step_rule=step)
        cert = verify_matching_result(inst, res)
        return {
            "kind": kind,
            "objective": res.weight,
            "solution": [list(e) for e in res.matching],
            "dual": {"s": list(res.dual.s), "t": list(res.dual.t)},
            "iterations": res.trace.iterations,
            "oracle_calls": res.trace.local_calls,
            "certificate": cert,
        }
    if kind == "matroid":
        inst = generate.load_instance(obj)
        p_hat = tuple(prediction["p"]) if prediction is not None else None
        res = solve_matroid_intersection(inst, p_hat, step_rule=step)
        cert = {
            "weight_splitting": dual_value(inst, res.dual) == res.weight,
            "common_base": inst.m1.is_independent(res.base)
            and inst.m2.is_independent(res.base) and len(res.base) == inst.r,
        }
        cert["verified"] = all(cert.values())
        return {
            "kind": kind,
            "objective": res.weight,
            "solution": sorted(res.base),
            "dual": list(res.dual),
            "iterations": res.trace.iterations,
            "oracle_calls": res.trace.oracle_calls,
            "certificate": cert,
        }
    if kind == "energy":
        inst = generate.load_instance(obj)
        p_hat = tuple(prediction["p"]) if prediction is not None else None
        res = solve_energy(inst, p_hat, step_rule=step if step == "unit" else "long")
        cert = {"value_recheck": energy_value(inst, res.labeling) == res.value}
        cert["verified"] = all(cert.values())
        return {
            "kind": kind,
            "objective": res.value,
            "solution": list(res.labeling),
            "dual": None,
            "iterations": res.trace.iterations,
            "oracle_calls": res.trace.local_calls,
            "certificate": cert,
        }
    raise _UsageError(f"instance file has unknown type {kind!r}")


def _emit(report, fmt):
    if fmt == "json":
        print(json.dumps(report, indent=1, default=str))
    else:
        print("field,value")
        for key, value in report.items():
            print(f"{key},{json.dumps(value, default=str)}")


def cli(argv):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "gen":
            opts = {}
            if args.kind == "matching" and args.weight is not None:
                opts["weight_range"] = args.weight
            if args.kind == "matroid":
                opts["family"] = args.family
                if args.weight is not None:
                    key = "weight" if args.family == "tight" else "weight_range"
                    opts[key] = args.weight
            if args.kind == "energy" and args.fixture:
                opts["fixture"] = args.fixture
            payload = generate.gen_instance(args.kind, args.n, args.seed, **opts)
            with open(args.out, "w") as f:
                json.dump(payload, f, indent=1)
            print(f"wrote {args.out}")
            return 0

        if args.command == "solve":
            obj = _load_json(args.instance)
            prediction = _load_json(args.prediction) if args.prediction else None
            report = _solve_any(obj, prediction, args.step)
            _emit(report, args.format)
            return 0

        if args.command == "project":
            system = LNatSystem.from_json(_load_json(args.instance))
            point = _load_json(args.point)["p"]
            proj = project_general(system, point)
            rounded = round_into(system, proj)
            diff = [a - b for a, b in zip(proj, point)]
            report = {
                "projection": [float(x) for x in proj],
                "rounded": list(rounded),
                "distance_pm": float(linf_pm_norm(diff)[2]),
                "rounded_in_system": system.contains(rounded),
            }
            _emit(report, "json")
            return 0

        if args.command == "warmstart-sweep":
            k_list = tuple(int(x) for x in args.k.split(","))
            config = harness.ExperimentConfig(
                kind=args.kind, n=args.n, seed=args.seed, k_list=k_list,
                trials=args.trials, step_rule=args.step, noise=args.noise,
                out_dir=args.out)
            records, csv_path, fig_path = harness.run_warmstart_sweep(config)
            print(f"wrote {csv_path} ({len(records)} rows) and {fig_path}")
            return 0

        if args.command == "learn":
            config = harness.ExperimentConfig(
                kind=args.kind, n=args.n, seed=args.seed, rounds=args.rounds,
                box_c=args.box, out_dir=args.out)
            rows, summary, csv_path, fig_path = harness.run_learning_experiment(config)
            print(f"wrote {csv_path} ({len(rows)} rows) and {fig_path}")
            print(json.dumps(summary, indent=1))
            return 0
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DcwarmError, OverflowError, KeyError, ValueError, TypeError) as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


def main():
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
