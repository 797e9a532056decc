"""Command line entry point: ``jsrin <verb> ...`` (or ``python -m jsrin``).

Exit codes: 0 success, 1 constraint violations, 2 bad input, 3 solver budget
exhausted.  ``JSRIN_WORKERS`` sets the worker count of the sweep verbs.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path as FsPath

from . import bench
from .generate import GenConfig, generate
from .heuristics import USER_ORDERS
from .milp import build_model, export_model
from .model import Allocation, load_instance, save_instance, validate_instance
from .pathgen import PathGenConfig
from .validate import StructuralMismatch, check_allocation, compute_report, format_violations


def _floats(text: str):
    return [float(t) for t in text.split(",") if t]


def _ints(text: str):
    if ":" in text:
        parts = [int(t) for t in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1
        return list(range(start, stop + 1, step))
    return [int(t) for t in text.split(",") if t]


def _gen_config(args) -> GenConfig:
    return GenConfig(
        num_nodes=args.nodes,
        num_slices=args.slices,
        users_per_slice=args.users_per_slice,
        mean_degree=args.degree,
        min_fraction=args.eps,
        integer=args.integer,
        paths=PathGenConfig(args.k_paths, args.max_hops),
        alpha=args.alpha,
    )


def _add_gen_flags(p):
    p.add_argument("--nodes", type=int, default=12)
    p.add_argument("--slices", type=int, default=3)
    p.add_argument("--users-per-slice", type=int, default=5)
    p.add_argument("--degree", type=float, default=3.0, help="mean node degree")
    p.add_argument("--eps", type=float, default=0.1, help="minimum fraction per slice")
    p.add_argument("--alpha", type=float, default=None, help="acceptance weight (default: acceptance-dominant)")
    p.add_argument("-k", "--k-paths", type=int, default=4, help="paths per user")
    p.add_argument("--max-hops", type=int, default=None)
    p.add_argument("--integer", action="store_true", help="sample integers instead of reals")


def _add_budget_flags(p):
    p.add_argument("--time-limit", type=float, default=None, help="exact solver budget in seconds")
    p.add_argument("--max-lp", type=int, default=None, help="exact solver budget in LP solves")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jsrin", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("gen", help="generate a random instance file")
    _add_gen_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("solve", help="run one solver on an instance and check the result")
    p.add_argument("instance")
    p.add_argument("--solver", choices=bench.SOLVERS, default="wf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--user-order", choices=USER_ORDERS, default="input")
    p.add_argument("-o", "--output", default=None, help="output prefix (default: instance stem + solver)")
    _add_budget_flags(p)

    p = sub.add_parser("check", help="check an allocation file against an instance")
    p.add_argument("instance")
    p.add_argument("allocation")

    p = sub.add_parser("export-mps", help="write the MILP as fixed-format MPS")
    p.add_argument("instance")
    p.add_argument("--mode", choices=("opt_in", "opt_c"), default="opt_in")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--varmap", default=None, help="also write the variable map as JSON")

    p = sub.add_parser("sweep-users", help="cost/bandwidth/runtime vs. number of users")
    _add_gen_flags(p)
    p.add_argument("--users", type=_ints, default=[3, 6, 9, 12, 15], help="list a,b,c or range from:to[:step]")
    p.add_argument("--seeds", type=_ints, default=list(range(10)))
    p.add_argument("--solvers", default="wf,random")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--plot-script", default=None)
    _add_budget_flags(p)

    p = sub.add_parser("sweep-capacity", help="acceptance vs. cloud or link capacity")
    _add_gen_flags(p)
    p.add_argument("--axis", choices=("cloud", "link"), default="cloud")
    p.add_argument("--scales", type=_floats, default=[0.2, 0.4, 0.6, 0.8, 1.0])
    p.add_argument("--seeds", type=_ints, default=list(range(10)))
    p.add_argument("--solvers", default="wf,random")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--plot-script", default=None)
    _add_budget_flags(p)
    return parser


def _load(path):
    inst = load_instance(path)
    problems = validate_instance(inst)
    if problems:
        raise ValueError("invalid instance:\n  " + "\n  ".join(problems))
    return inst


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError, StructuralMismatch) as exc:
        print(f"jsrin: error: {exc}", file=sys.stderr)
        return bench.EXIT_INPUT


def _dispatch(args) -> int:
    if args.verb == "gen":
        inst = generate(_gen_config(args), args.seed)
        save_instance(inst, args.output)
        print(f"wrote {args.output}: {len(inst.nodes)} nodes, {len(inst.links)} links, {len(inst.users)} users")
        return bench.EXIT_OK

    if args.verb == "solve":
        inst = _load(args.instance)
        prefix = args.output or str(FsPath(args.instance).with_suffix("")) + f".{args.solver}"
        code = bench.run_single(inst, args.solver, prefix, args.seed, args.user_order, args.time_limit, args.max_lp)
        report = json.loads(FsPath(prefix + ".report.json").read_text())
        if "objective" in report:
            print(f"{args.solver}: accepted={report['accepted']} cost={report['total_cost']:.4f} "
                  f"objective={report['objective']:.4f} time={report['wall_clock']:.3f}s")
        for v in report.get("violations", []):
            print(v)
        if code == bench.EXIT_BUDGET:
            print("budget exhausted", file=sys.stderr)
        return code

    if args.verb == "check":
        inst = _load(args.instance)
        alloc = Allocation.from_dict(json.loads(FsPath(args.allocation).read_text()))
        violations = check_allocation(inst, alloc)
        sys.stdout.write(format_violations(violations))
        if violations:
            return bench.EXIT_VIOLATIONS
        rep = compute_report(inst, alloc)
        print(f"feasible: accepted={rep.accepted} cost={rep.total_cost:.4f} objective={rep.objective:.4f}")
        return bench.EXIT_OK

    if args.verb == "export-mps":
        inst = _load(args.instance)
        model, vmap = build_model(inst, args.mode)
        export_model(model, vmap, args.output)
        if args.varmap:
            FsPath(args.varmap).write_text(json.dumps({k: list(v) for k, v in vmap.by_name.items()}, indent=1))
        print(f"wrote {args.output}: {len(model.variables)} columns, {len(model.rows)} rows")
        return bench.EXIT_OK

    solvers = [s for s in args.solvers.split(",") if s]
    gen = _gen_config(args)
    if args.verb == "sweep-users":
        cfg = bench.UserSweep(tuple(args.users), tuple(args.seeds), tuple(solvers), gen, args.time_limit)
        rows = bench.sweep_users(cfg)
        out = bench.write_user_sweep(rows, args.output)
    else:
        cfg = bench.CapacitySweep(tuple(args.scales), args.axis, tuple(args.seeds), tuple(solvers), gen,
                                  args.time_limit)
        rows = bench.sweep_capacity(cfg)
        out = bench.write_capacity_sweep(rows, args.output)
    if args.plot_script:
        bench.write_plot_template(args.plot_script)
    failed = sum(1 for r in rows if r["status"] != "ok")
    print(f"wrote {out} ({len(rows)} rows, {failed} failed cells) and {out.with_suffix('.mean.csv')}")
    return bench.EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
