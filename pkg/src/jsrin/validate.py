"""Feasibility checking (C1-C9) and cost/acceptance metrics for an Allocation.

Kept free of any code shared with the MILP builder or the solvers: every
constraint is re-evaluated here straight from the instance data.  The
big-M rows C3 and C4 are checked as implications (positive compute share
forces the prefix links on; positive node load forces the node on).
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .model import Allocation, NetworkInstance, SolveReport

TOL = 1e-9


class StructuralMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    tag: str
    indices: Tuple[Tuple[str, int], ...]
    lhs: float
    rhs: float

    def __str__(self) -> str:
        idx = " ".join(f"{k}={v}" for k, v in self.indices)
        return f"{self.tag}\t{idx}\tlhs={self.lhs!r}\trhs={self.rhs!r}"


def _tol(rhs: float) -> float:
    return TOL * max(1.0, abs(rhs))


def _check_structure(inst: NetworkInstance, a: Allocation) -> None:
    for u, p in a.path_choice:
        if u not in inst.user or p not in inst.path or inst.path[p].user_id != u:
            raise StructuralMismatch(f"structural mismatch: path choice ({u}, {p})")
    for (u, p, v) in a.compute_share:
        if p not in inst.path or inst.path[p].user_id != u or v not in inst.path[p].nodes:
            raise StructuralMismatch(f"structural mismatch: compute share ({u}, {p}, {v})")
    for (u, p, e) in a.link_use:
        if p not in inst.path or inst.path[p].user_id != u or e not in inst.path[p].links:
            raise StructuralMismatch(f"structural mismatch: link use ({u}, {p}, {e})")
    for v in a.node_active:
        if v not in inst.node:
            raise StructuralMismatch(f"structural mismatch: unknown node {v}")
    for m in a.slice_fraction:
        if m not in inst.slice:
            raise StructuralMismatch(f"structural mismatch: unknown slice {m}")


def check_allocation(inst: NetworkInstance, a: Allocation) -> List[Violation]:
    """Every violated constraint instance; an empty list means feasible."""
    _check_structure(inst, a)
    out: List[Violation] = []
    w = a.compute_share
    lam = {m.id: a.slice_fraction.get(m.id, 0.0) for m in inst.slices}

    def flag(tag, indices, lhs, rhs):
        out.append(Violation(tag, tuple(indices), float(lhs), float(rhs)))

    # C1
    for u in inst.users:
        n = sum(1 for p in inst.paths_of(u.id) if (u.id, p.id) in a.path_choice)
        if n > 1:
            flag("C1", [("user", u.id)], n, 1)

    # C2
    for u in inst.users:
        for p in inst.paths_of(u.id):
            lhs = sum(w.get((u.id, p.id, v), 0.0) for v in p.nodes)
            rhs = u.rate_requirement * (1 if (u.id, p.id) in a.path_choice else 0)
            if abs(lhs - rhs) > _tol(rhs):
                flag("C2", [("user", u.id), ("path", p.id)], lhs, rhs)

    # C3 (implication form)
    for (u, p, v), val in sorted(w.items()):
        if val > TOL:
            for e in sorted(inst.path[p].prefix_links[v]):
                if (u, p, e) not in a.link_use:
                    flag("C3", [("user", u), ("path", p), ("node", v), ("link", e)], val, 0.0)

    # C4 (implication form)
    load: Dict[int, float] = defaultdict(float)
    for (u, p, v), val in w.items():
        load[v] += val
    for v in sorted(load):
        if load[v] > TOL and v not in a.node_active:
            flag("C4", [("node", v)], load[v], 0.0)

    # C5
    slice_load: Dict[Tuple[int, int], float] = defaultdict(float)
    for (u, p, v), val in w.items():
        slice_load[(inst.user[u].slice_id, v)] += val
    for (m, v), val in sorted(slice_load.items()):
        rhs = lam[m] * inst.node[v].compute_capacity
        if val > rhs + _tol(rhs):
            flag("C5", [("slice", m), ("node", v)], val, rhs)

    # C6
    link_load: Dict[Tuple[int, int], float] = defaultdict(float)
    for (u, p, e) in a.link_use:
        link_load[(inst.user[u].slice_id, e)] += inst.user[u].rate_requirement
    for (m, e), val in sorted(link_load.items()):
        rhs = lam[m] * inst.link[e].capacity
        if val > rhs + _tol(rhs):
            flag("C6", [("slice", m), ("link", e)], val, rhs)

    # C7
    for s in inst.slices:
        if lam[s.id] < s.min_fraction - TOL:
            flag("C7", [("slice", s.id)], lam[s.id], s.min_fraction)

    # C8
    total = sum(lam.values())
    if abs(total - 1.0) > TOL:
        flag("C8", [], total, 1.0)
    for m, val in lam.items():
        if val < -TOL or val > 1.0 + TOL:
            flag("C8", [("slice", m)], val, 1.0 if val > 1 else 0.0)

    # C9
    for u in inst.users:
        for p in inst.paths_of(u.id):
            lhs = sum(inst.node[v].compute_delay_per_rate * w.get((u.id, p.id, v), 0.0) for v in p.nodes)
            lhs += sum(inst.link[e].delay_per_rate * u.rate_requirement
                       for e in p.links if (u.id, p.id, e) in a.link_use)
            if lhs > u.delay_budget + _tol(u.delay_budget):
                flag("C9", [("user", u.id), ("path", p.id)], lhs, u.delay_budget)
    return out


def format_violations(violations: List[Violation]) -> str:
    return "".join(f"{v}\n" for v in violations)


def compute_report(inst: NetworkInstance, a: Allocation, wall_clock: float = 0.0,
                   solver: str = "", reasons: Optional[Dict[int, str]] = None) -> SolveReport:
    """Acceptance count, energy-cost breakdown and bandwidth of ``a``."""
    compute = sum(val * inst.node[v].compute_cost_per_rate for (u, p, v), val in a.compute_share.items())
    activation = sum(inst.node[v].activation_cost for v in a.node_active)
    link = sum(inst.user[u].rate_requirement * inst.link[e].cost_per_rate for (u, p, e) in a.link_use)
    bandwidth = sum(inst.user[u].rate_requirement for (u, p, e) in a.link_use)
    accepted = len(a.path_choice)
    total = compute + activation + link
    status = {}
    reasons = reasons or {}
    for u in inst.users:
        p = a.chosen_path(u.id)
        if p is not None:
            status[u.id] = f"accepted path={p}"
        elif not inst.paths_of(u.id):
            status[u.id] = "rejected: empty path set"
        else:
            status[u.id] = "rejected: " + reasons.get(u.id, "not admitted")
    return SolveReport(
        objective=inst.objective_weight * accepted - total,
        accepted=accepted,
        total_cost=total,
        compute_cost=compute,
        activation_cost=activation,
        link_cost=link,
        bandwidth_usage=bandwidth,
        per_user_status=status,
        wall_clock=wall_clock,
        solver=solver,
    )
