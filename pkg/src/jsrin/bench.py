"""Single runs and parameter sweeps producing CSV files.

Sweep CSVs start with a ``# schema: <name> v<version>`` comment line followed
by a header row; rows are sorted by their key columns before writing so the
file does not depend on worker scheduling.  A companion ``*.mean.csv`` holds
per-configuration means over seeds (successful cells only).
"""
from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path as FsPath
from statistics import mean
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .exact import BudgetExhausted, solve_exact
from .generate import GenConfig, generate, keep_users, scale_capacity
from .heuristics import r_jsrin, wf_jsrin
from .model import Allocation, NetworkInstance, SolveReport
from .validate import check_allocation

SOLVERS = ("wf", "random", "exact_in", "exact_c")
SCHEMA_VERSION = 1
WORKERS_ENV = "JSRIN_WORKERS"

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3

USER_COLUMNS = ["solver", "users", "seed", "status", "A", "B", "V_ec", "P_ec", "E_ec", "bandwidth", "wall_clock"]
CAPACITY_COLUMNS = ["solver", "axis", "scale", "seed", "status", "users", "accepted", "B", "bandwidth", "wall_clock"]


def run_solver(instance: NetworkInstance, solver: str, seed: int = 0, user_order: str = "input",
               time_limit: Optional[float] = None, max_lp_solves: Optional[int] = None) -> Tuple[Allocation, SolveReport]:
    """Dispatch to one solver; wall clock covers the solver call only."""
    t0 = time.perf_counter()
    if solver == "wf":
        alloc, report = wf_jsrin(instance, user_order=user_order)
    elif solver == "random":
        alloc, report = r_jsrin(instance, seed, user_order=user_order)
    elif solver in ("exact_in", "exact_c"):
        mode = "opt_in" if solver == "exact_in" else "opt_c"
        alloc, report = solve_exact(instance, mode, max_lp_solves=max_lp_solves, time_limit=time_limit)
    else:
        raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    report.wall_clock = time.perf_counter() - t0
    report.solver = solver
    return alloc, report


def write_json(obj, path) -> None:
    FsPath(path).write_text(json.dumps(obj, indent=1, sort_keys=True))


def run_single(instance: NetworkInstance, solver: str, out_prefix, seed: int = 0, user_order: str = "input",
               time_limit: Optional[float] = None, max_lp_solves: Optional[int] = None) -> int:
    """Solve, check, write ``<prefix>.report.json`` and ``<prefix>.alloc.json``; return an exit code."""
    prefix = str(out_prefix)
    try:
        alloc, report = run_solver(instance, solver, seed, user_order, time_limit, max_lp_solves)
        code = EXIT_OK
    except BudgetExhausted as exc:
        if exc.allocation is None:
            write_json({"status": "budget exhausted", "message": str(exc), "upper_bound": exc.upper_bound},
                       prefix + ".report.json")
            return EXIT_BUDGET
        alloc, report = exc.allocation, exc.report
        report.details["budget_exhausted"] = 1.0
        report.details["upper_bound"] = exc.upper_bound
        code = EXIT_BUDGET
    violations = check_allocation(instance, alloc)
    doc = report.to_dict()
    doc["violations"] = [str(v) for v in violations]
    write_json(doc, prefix + ".report.json")
    write_json(alloc.to_dict(), prefix + ".alloc.json")
    if violations:
        return EXIT_VIOLATIONS
    return code


# --------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class UserSweep:
    users: Sequence[int] = (3, 6, 9, 12, 15)
    seeds: Sequence[int] = tuple(range(10))
    solvers: Sequence[str] = ("wf", "random")
    gen: GenConfig = field(default_factory=GenConfig)
    time_limit: Optional[float] = None


@dataclass(frozen=True)
class CapacitySweep:
    scales: Sequence[float] = (0.2, 0.4, 0.6, 0.8, 1.0)
    axis: str = "cloud"  # "cloud" or "link"
    seeds: Sequence[int] = tuple(range(10))
    solvers: Sequence[str] = ("wf", "random")
    gen: GenConfig = field(default_factory=GenConfig)
    time_limit: Optional[float] = None


def users_instance(gen: GenConfig, users: int, seed: int) -> NetworkInstance:
    """Instance with ``users`` users dealt round-robin over the slices."""
    per_slice = -(-users // gen.num_slices)
    inst = generate(replace(gen, users_per_slice=per_slice), seed)
    keep = [inst.slices[j % gen.num_slices].users[j // gen.num_slices] for j in range(users)]
    return keep_users(inst, keep)


def _cell_metrics(instance, solver, seed, time_limit):
    try:
        alloc, report = run_solver(instance, solver, seed, time_limit=time_limit)
        status = "ok"
    except BudgetExhausted as exc:
        if exc.allocation is None:
            return "budget_exhausted", None
        alloc, report, status = exc.allocation, exc.report, "budget_exhausted"
    except Exception as exc:  # recorded in the CSV, the sweep goes on
        return f"error: {type(exc).__name__}: {exc}", None
    violations = check_allocation(instance, alloc)
    if violations:
        return f"infeasible: {len(violations)} violations", None
    return status, report


def _user_cell(args):
    gen, solver, users, seed, time_limit = args
    inst = users_instance(gen, users, seed)
    status, rep = _cell_metrics(inst, solver, seed, time_limit)
    row = {"solver": solver, "users": users, "seed": seed, "status": status}
    if rep is not None:
        row.update(A=rep.accepted, B=rep.total_cost, V_ec=rep.compute_cost, P_ec=rep.activation_cost,
                   E_ec=rep.link_cost, bandwidth=rep.bandwidth_usage, wall_clock=rep.wall_clock)
    return row


def _capacity_cell(args):
    gen, solver, axis, scale, seed, time_limit = args
    inst = generate(gen, seed)
    inst = scale_capacity(inst, cloud=scale) if axis == "cloud" else scale_capacity(inst, link=scale)
    status, rep = _cell_metrics(inst, solver, seed, time_limit)
    row = {"solver": solver, "axis": axis, "scale": scale, "seed": seed, "status": status, "users": len(inst.users)}
    if rep is not None:
        row.update(accepted=rep.accepted, B=rep.total_cost, bandwidth=rep.bandwidth_usage, wall_clock=rep.wall_clock)
    return row


def workers_from_env() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _map(fn: Callable, cells: List, workers: Optional[int]) -> List[dict]:
    workers = workers or workers_from_env()
    if workers <= 1:
        return [fn(c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells))


def sweep_users(cfg: UserSweep, workers: Optional[int] = None) -> List[dict]:
    if any(s not in SOLVERS for s in cfg.solvers):
        raise ValueError(f"solvers must be drawn from {SOLVERS}")
    cells = [(cfg.gen, s, n, seed, cfg.time_limit) for s in cfg.solvers for n in cfg.users for seed in cfg.seeds]
    rows = _map(_user_cell, cells, workers)
    return sorted(rows, key=lambda r: (r["solver"], r["users"], r["seed"]))


def sweep_capacity(cfg: CapacitySweep, workers: Optional[int] = None) -> List[dict]:
    if cfg.axis not in ("cloud", "link"):
        raise ValueError("axis must be 'cloud' or 'link'")
    if any(s not in SOLVERS for s in cfg.solvers):
        raise ValueError(f"solvers must be drawn from {SOLVERS}")
    cells = [(cfg.gen, s, cfg.axis, sc, seed, cfg.time_limit)
             for s in cfg.solvers for sc in cfg.scales for seed in cfg.seeds]
    rows = _map(_capacity_cell, cells, workers)
    return sorted(rows, key=lambda r: (r["solver"], r["scale"], r["seed"]))


def aggregate(rows: List[dict], keys: Sequence[str], values: Sequence[str]) -> List[dict]:
    groups: Dict[tuple, List[dict]] = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r)
    out = []
    for key in sorted(groups):
        ok = [r for r in groups[key] if r["status"] == "ok"]
        row = dict(zip(keys, key))
        row["cells"] = len(groups[key])
        row["ok"] = len(ok)
        for v in values:
            row[v] = mean(float(r[v]) for r in ok) if ok else ""
        out.append(row)
    return out


def write_csv(rows: List[dict], columns: Sequence[str], path, schema: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {schema} v{SCHEMA_VERSION}\n")
        writer = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore", restval="")
        writer.writeheader()
        writer.writerows(rows)


def read_csv(path) -> List[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_user_sweep(rows: List[dict], path) -> FsPath:
    path = FsPath(path)
    write_csv(rows, USER_COLUMNS, path, "sweep-users")
    metrics = ["A", "B", "V_ec", "P_ec", "E_ec", "bandwidth", "wall_clock"]
    write_csv(aggregate(rows, ["solver", "users"], metrics), ["solver", "users", "cells", "ok"] + metrics,
              path.with_suffix(".mean.csv"), "sweep-users-mean")
    return path


def write_capacity_sweep(rows: List[dict], path) -> FsPath:
    path = FsPath(path)
    write_csv(rows, CAPACITY_COLUMNS, path, "sweep-capacity")
    metrics = ["accepted", "B", "bandwidth", "wall_clock"]
    write_csv(aggregate(rows, ["solver", "axis", "scale"], metrics),
              ["solver", "axis", "scale", "cells", "ok"] + metrics,
              path.with_suffix(".mean.csv"), "sweep-capacity-mean")
    return path


PLOT_TEMPLATE = '''"""Plot a jsrin sweep mean file: python {name} <file.mean.csv> <x column> <y column>"""
import sys

import matplotlib.pyplot as plt
import pandas as pd

df = pd.read_csv(sys.argv[1], comment="#")
x, y = sys.argv[2], sys.argv[3]
for solver, grp in df.groupby("solver"):
    plt.plot(grp[x], grp[y], marker="o", label=solver)
plt.xlabel(x)
plt.ylabel(y)
plt.legend()
plt.savefig(sys.argv[1].rsplit(".", 2)[0] + f"_{{y}}.png", dpi=150)
'''


def write_plot_template(path) -> FsPath:
    path = FsPath(path)
    path.write_text(PLOT_TEMPLATE.format(name=path.name))
    return path
