"""Exact solver for desk-scale instances, plus a grid brute-force oracle.

The discrete part of a solution is, per user, either "reject" or a pair
(path, farthest compute index k): compute may sit on ``nodes[0..k]`` and the
user's rate travels exactly the first ``k`` links.  Once every user has a
choice, link use and link cost are fixed and what remains is a small
mixed problem in the compute shares, slice fractions and node activations.
That remainder is solved exactly by branching on the activation binaries
over :func:`jsrin.lp.solve_lp` relaxations.

The outer enumeration is a depth-first search in user order.  Each partial
assignment is bounded by the LP relaxation of the users fixed so far plus,
for every undecided user, its best stand-alone gain; subtrees that cannot
reach the incumbent are dropped.
"""
from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .heuristics import wf_jsrin
from .lp import solve_lp
from .model import Allocation, NetworkInstance, Path, SolveReport, UserRequest
from .validate import compute_report

OBJ_TOL = 1e-6
INT_TOL = 1e-9
REJECT_KEY = (math.inf, math.inf)


class BudgetExhausted(RuntimeError):
    """Search stopped early; carries the best allocation found so far."""

    def __init__(self, message: str, allocation: Optional[Allocation], report: Optional[SolveReport],
                 upper_bound: float):
        super().__init__(message)
        self.allocation = allocation
        self.report = report
        self.upper_bound = upper_bound
        self.proven_optimal = False


class OracleTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class Choice:
    user: UserRequest
    path: Path
    k: int
    allowed: Tuple[int, ...]
    links: Tuple[int, ...]
    link_cost: float
    link_delay: float

    @property
    def key(self) -> Tuple[float, float]:
        return (self.path.id, self.k)


@dataclass
class _Inner:
    cost: float
    w: Dict[Tuple[int, int], float]
    lam: Dict[int, float]
    y: Dict[int, float]


@dataclass
class _Stats:
    lp_solves: int = 0
    nodes: int = 0
    leaves: int = 0


class _InnerProblem:
    """LP / small MILP over compute shares, slice fractions and activations."""

    def __init__(self, inst: NetworkInstance, stats: _Stats, budget):
        self.inst = inst
        self.stats = stats
        self.budget = budget
        self.slices = [m.id for m in inst.slices]

    def relax(self, choices: Sequence[Choice], fixed_y: Optional[Dict[int, int]] = None,
              theta: bool = True) -> Optional[_Inner]:
        inst = self.inst
        fixed_y = fixed_y or {}
        self.budget()
        self.stats.lp_solves += 1

        # lambda lower bounds from link loads (C6) and minimum fractions (C7)
        lam_lo = {m.id: m.min_fraction for m in inst.slices}
        link_load: Dict[Tuple[int, int], float] = {}
        for ch in choices:
            m = ch.user.slice_id
            for e in ch.links:
                link_load[(m, e)] = link_load.get((m, e), 0.0) + ch.user.rate_requirement
        for (m, e), load in link_load.items():
            lam_lo[m] = max(lam_lo[m], load / inst.link[e].capacity)
        if any(v > 1.0 + 1e-12 for v in lam_lo.values()) or sum(lam_lo.values()) > 1.0 + 1e-12:
            return None
        link_cost = sum(ch.link_cost for ch in choices)

        w_idx: Dict[Tuple[int, int], int] = {}
        for i, ch in enumerate(choices):
            for v in ch.allowed:
                w_idx[(i, v)] = len(w_idx)
        nw = len(w_idx)
        lam_idx = {m: nw + j for j, m in enumerate(self.slices)}
        y_nodes = sorted({v for (_, v) in w_idx})
        y_idx = {v: nw + len(lam_idx) + j for j, v in enumerate(y_nodes)}
        n = nw + len(lam_idx) + len(y_idx)

        c = np.zeros(n)
        for (i, v), j in w_idx.items():
            c[j] = inst.node[v].compute_cost_per_rate
        if theta:
            for v, j in y_idx.items():
                c[j] = inst.node[v].activation_cost

        A_eq, b_eq, A_ub, b_ub = [], [], [], []
        for i, ch in enumerate(choices):
            row = np.zeros(n)
            for v in ch.allowed:
                row[w_idx[(i, v)]] = 1.0
            A_eq.append(row)
            b_eq.append(ch.user.rate_requirement)
        row = np.zeros(n)
        row[list(lam_idx.values())] = 1.0
        A_eq.append(row)
        b_eq.append(1.0)

        # C5 per (slice, node) with at least one share
        groups: Dict[Tuple[int, int], List[int]] = {}
        for (i, v), j in w_idx.items():
            groups.setdefault((choices[i].user.slice_id, v), []).append(j)
        for (m, v), cols in groups.items():
            row = np.zeros(n)
            row[cols] = 1.0
            row[lam_idx[m]] = -inst.node[v].compute_capacity
            A_ub.append(row)
            b_ub.append(0.0)
        # C9 per user
        for i, ch in enumerate(choices):
            budget = ch.user.delay_budget - ch.link_delay
            row = np.zeros(n)
            for v in ch.allowed:
                row[w_idx[(i, v)]] = inst.node[v].compute_delay_per_rate
            A_ub.append(row)
            b_ub.append(budget)
        # activation links: share <= min(rate, cap) * y, load <= cap * y
        for (i, v), j in w_idx.items():
            row = np.zeros(n)
            row[j] = 1.0
            row[y_idx[v]] = -min(choices[i].user.rate_requirement, inst.node[v].compute_capacity)
            A_ub.append(row)
            b_ub.append(0.0)
        by_node: Dict[int, List[int]] = {}
        for (i, v), j in w_idx.items():
            by_node.setdefault(v, []).append(j)
        for v, cols in by_node.items():
            row = np.zeros(n)
            row[cols] = 1.0
            row[y_idx[v]] = -inst.node[v].compute_capacity
            A_ub.append(row)
            b_ub.append(0.0)

        bounds = [(0.0, None)] * nw
        bounds += [(lam_lo[m], 1.0) for m in self.slices]
        for v in y_nodes:
            if v in fixed_y:
                bounds.append((float(fixed_y[v]), float(fixed_y[v])))
            else:
                bounds.append((0.0, 1.0))

        res = solve_lp(c, np.array(A_ub) if A_ub else None, np.array(b_ub) if b_ub else None,
                       np.array(A_eq), np.array(b_eq), bounds)
        if res.status != "optimal":
            return None
        x = res.x
        return _Inner(
            cost=float(res.fun) + link_cost,
            w={(choices[i].user.id, v): float(x[j]) for (i, v), j in w_idx.items()},
            lam={m: float(x[j]) for m, j in lam_idx.items()},
            y={v: float(x[j]) for v, j in y_idx.items()},
        )

    def solve_integral(self, choices: Sequence[Choice], root: Optional[_Inner],
                       cutoff: float) -> Optional[_Inner]:
        """Best integral activation pattern; ``cutoff`` is the largest useful cost."""
        if root is None:
            return None
        best: Optional[_Inner] = None
        counter = itertools.count()
        heap = [(root.cost, next(counter), {}, root)]
        while heap:
            lb, _, fixed, sol = heapq.heappop(heap)
            limit = cutoff if best is None else min(cutoff, best.cost)
            if lb > limit + OBJ_TOL:
                break
            frac = [(v, val) for v, val in sorted(sol.y.items())
                    if v not in fixed and INT_TOL < val < 1.0 - INT_TOL]
            if not frac:
                if best is None or sol.cost < best.cost - 1e-12:
                    best = sol
                continue
            v = max(frac, key=lambda t: (min(t[1], 1.0 - t[1]), -t[0]))[0]
            for val in (1, 0):
                child_fixed = dict(fixed)
                child_fixed[v] = val
                child = self.relax(choices, child_fixed)
                if child is not None:
                    heapq.heappush(heap, (child.cost, next(counter), child_fixed, child))
        if best is not None:
            # activation relaxations can leave y at 1 on an idle node; round
            best.y = {v: 1.0 if val > 0.5 else 0.0 for v, val in best.y.items()}
        return best


def _choices_for(inst: NetworkInstance, user: UserRequest, mode: str) -> List[Choice]:
    out = []
    cloud = inst.cloud
    r = user.rate_requirement
    for p in inst.paths_of(user.id):
        ks = [len(p.nodes) - 1] if mode == "opt_c" else range(len(p.nodes))
        for k in ks:
            links = p.links_up_to(k)
            allowed = (cloud,) if mode == "opt_c" else p.nodes[:k + 1]
            out.append(Choice(
                user, p, k, tuple(allowed), links,
                link_cost=sum(r * inst.link[e].cost_per_rate for e in links),
                link_delay=sum(r * inst.link[e].delay_per_rate for e in links),
            ))
    return out


def solve_exact(instance: NetworkInstance, mode: str = "opt_in", max_lp_solves: Optional[int] = None,
                time_limit: Optional[float] = None, warm_start: bool = True) -> Tuple[Allocation, SolveReport]:
    """Maximise ``alpha * accepted - cost`` over C1-C9.

    ``mode="opt_c"`` confines all compute to the cloud node.  Among optimal
    solutions (within ``1e-6``) the one whose per-user ``(path id, farthest
    index)`` sequence is lexicographically smallest wins, rejected users
    sorting last.  Raises :class:`BudgetExhausted` when ``max_lp_solves`` or
    ``time_limit`` run out.
    """
    if mode not in ("opt_in", "opt_c"):
        raise ValueError(f"mode must be 'opt_in' or 'opt_c', got {mode!r}")
    t0 = time.perf_counter()
    name = "exact_in" if mode == "opt_in" else "exact_c"
    inst = instance
    alpha = inst.objective_weight
    stats = _Stats()

    def budget():
        if max_lp_solves is not None and stats.lp_solves >= max_lp_solves:
            raise _Stop("LP budget exhausted")
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            raise _Stop("time budget exhausted")

    inner = _InnerProblem(inst, stats, budget)
    users = list(inst.users)

    # the heuristic gives both a pruning threshold and an incumbent to fall back on
    threshold = 0.0 - OBJ_TOL  # rejecting everybody is always feasible
    fallback = Allocation(slice_fraction=_fallback_lambda(inst))
    if warm_start and mode == "opt_in" and users:
        wf_alloc, wf_report = wf_jsrin(inst)
        threshold = max(threshold, wf_report.objective - OBJ_TOL)
        fallback = wf_alloc

    # per-user candidate choices, screened and scored in isolation
    options: List[List[Tuple[float, Choice]]] = []
    gain: List[float] = []
    try:
        for u in users:
            scored = []
            for ch in _choices_for(inst, u, mode):
                if ch.link_delay > u.delay_budget:
                    continue
                alone = inner.relax([ch], theta=False)
                if alone is not None:
                    scored.append((alone.cost, ch))
            scored.sort(key=lambda t: (t[0], t[1].key))
            options.append(scored)
            gain.append(max(0.0, alpha - scored[0][0]) if scored else 0.0)
    except _Stop as stop:
        raise BudgetExhausted(str(stop), fallback, compute_report(inst, fallback, time.perf_counter() - t0, name),
                              alpha * len(users)) from None
    tail_gain = [sum(gain[i:]) for i in range(len(users) + 1)]

    best_obj = -math.inf
    best: Optional[Tuple[float, tuple, List[Optional[Choice]], _Inner]] = None
    assign: List[Optional[Choice]] = []

    def consider(obj: float, sol: _Inner):
        nonlocal best, best_obj, threshold
        key = tuple(ch.key if ch else REJECT_KEY for ch in assign)
        if best is None or obj > best_obj + OBJ_TOL or (obj >= best_obj - OBJ_TOL and key < best[1]):
            best = (obj, key, list(assign), sol)
            best_obj = obj
            threshold = max(threshold, obj - OBJ_TOL)

    def dfs(i: int, accepted: int, relax_sol: Optional[_Inner]):
        stats.nodes += 1
        chosen = [ch for ch in assign if ch is not None]
        if i == len(users):
            stats.leaves += 1
            if not chosen:
                consider(0.0, _Inner(0.0, {}, _fallback_lambda(inst), {}))
                return
            cutoff = alpha * accepted - threshold
            sol = inner.solve_integral(chosen, relax_sol, cutoff)
            if sol is not None:
                consider(alpha * accepted - sol.cost, sol)
            return
        for base_cost, ch in options[i]:
            # quick bound before paying for the LP
            partial_cost = relax_sol.cost if relax_sol is not None else 0.0
            if alpha * (accepted + 1) - partial_cost - base_cost + tail_gain[i + 1] < threshold:
                continue
            assign.append(ch)
            sol = inner.relax(chosen + [ch])
            if sol is not None and alpha * (accepted + 1) - sol.cost + tail_gain[i + 1] >= threshold:
                dfs(i + 1, accepted + 1, sol)
            assign.pop()
        partial_cost = relax_sol.cost if relax_sol is not None else 0.0
        if alpha * accepted - partial_cost + tail_gain[i + 1] >= threshold:
            assign.append(None)
            dfs(i + 1, accepted, relax_sol)
            assign.pop()

    try:
        dfs(0, 0, None)
    except _Stop as stop:
        alloc = _to_allocation(inst, best[2], best[3]) if best is not None else fallback
        report = compute_report(inst, alloc, time.perf_counter() - t0, name)
        raise BudgetExhausted(str(stop), alloc, report, alpha * len(users)) from None

    assert best is not None
    alloc = _to_allocation(inst, best[2], best[3])
    report = compute_report(inst, alloc, time.perf_counter() - t0, name,
                            reasons={u.id: "not in optimal solution" for u in users})
    report.details.update(lp_solves=stats.lp_solves, search_nodes=stats.nodes, leaves=stats.leaves)
    return alloc, report


class _Stop(Exception):
    pass


def _fallback_lambda(inst: NetworkInstance) -> Dict[int, float]:
    # any point with lambda >= eps and sum 1; spread the slack evenly
    if not inst.slices:
        return {}
    slack = 1.0 - sum(m.min_fraction for m in inst.slices)
    return {m.id: m.min_fraction + slack / len(inst.slices) for m in inst.slices}


def _to_allocation(inst: NetworkInstance, assign: Sequence[Optional[Choice]], sol: _Inner) -> Allocation:
    alloc = Allocation(slice_fraction=dict(sol.lam) if sol.lam else _fallback_lambda(inst))
    for ch in assign:
        if ch is None:
            continue
        u, p = ch.user.id, ch.path.id
        alloc.path_choice.add((u, p))
        for v in ch.allowed:
            val = sol.w.get((u, v), 0.0)
            if val > 1e-12:
                alloc.compute_share[(u, p, v)] = val
                alloc.node_active.add(v)
        for e in ch.links:
            alloc.link_use.add((u, p, e))
    return alloc


# --------------------------------------------------------------------------
# brute-force oracle

ORACLE_MAX_USERS = 3
ORACLE_MAX_PATHS = 2
ORACLE_MAX_PATH_NODES = 4


def _compositions(units: int, parts: int):
    """All tuples of ``parts`` non-negative ints summing to ``units``."""
    for cuts in itertools.combinations(range(units + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(units + parts - 2 - prev)
        yield tuple(out)


def _lambda_grid(inst: NetworkInstance, step: float) -> np.ndarray:
    n_slices = len(inst.slices)
    total = int(round(1.0 / step))
    if abs(total * step - 1.0) > 1e-12:
        raise ValueError("lambda step must divide 1")
    pts = []
    for comp in _compositions(total, n_slices):
        lam = np.array(comp, dtype=float) / total
        if all(lam[j] >= m.min_fraction - 1e-12 for j, m in enumerate(inst.slices)):
            pts.append(lam)
    return np.array(pts).reshape(-1, n_slices)


def brute_force_oracle(instance: NetworkInstance, grid: float = 1.0, lambda_step: float = 0.05,
                       mode: str = "opt_in") -> Tuple[Allocation, SolveReport]:
    """Best allocation whose compute shares are multiples of ``grid`` and whose
    slice fractions are multiples of ``lambda_step``, found by exhaustive
    enumeration.  Every user rate must be a multiple of ``grid``.
    """
    inst = instance
    t0 = time.perf_counter()
    if len(inst.users) > ORACLE_MAX_USERS:
        raise OracleTooLarge(f"instance too large for oracle: {len(inst.users)} users")
    for u in inst.users:
        ps = inst.paths_of(u.id)
        if len(ps) > ORACLE_MAX_PATHS or any(len(p.nodes) > ORACLE_MAX_PATH_NODES for p in ps):
            raise OracleTooLarge(f"instance too large for oracle: user {u.id} paths")
    if not inst.users:
        alloc = Allocation(slice_fraction=_fallback_lambda(inst))
        return alloc, compute_report(inst, alloc, time.perf_counter() - t0, "oracle")

    node_ids = [n.id for n in inst.nodes]
    nidx = {v: i for i, v in enumerate(node_ids)}
    link_ids = [e.id for e in inst.links]
    lidx = {e: i for i, e in enumerate(link_ids)}
    slice_ids = [m.id for m in inst.slices]
    sidx = {m: i for i, m in enumerate(slice_ids)}
    cap_v = np.array([inst.node[v].compute_capacity for v in node_ids])
    cap_e = np.array([inst.link[e].capacity for e in link_ids])
    theta = np.array([inst.node[v].activation_cost for v in node_ids])
    alpha = inst.objective_weight
    cloud = inst.cloud

    # per-user option tables
    tables = []
    for u in inst.users:
        r = u.rate_requirement
        units = int(round(r / grid))
        if abs(units * grid - r) > 1e-9:
            raise ValueError(f"user {u.id} rate {r} is not a multiple of grid {grid}")
        rows = [(None, None, np.zeros(len(node_ids)), np.zeros(len(link_ids)), 0.0, 0)]
        for p in inst.paths_of(u.id):
            for k in range(len(p.nodes)):
                links = p.links[:k]
                for comp in _compositions(units, k + 1):
                    w = np.zeros(len(node_ids))
                    for j, cnt in enumerate(comp):
                        w[nidx[p.nodes[j]]] = cnt * grid
                    if mode == "opt_c" and any(w[nidx[v]] > 0 for v in p.nodes if v != cloud):
                        continue
                    delay = float(sum(inst.node[v].compute_delay_per_rate * w[nidx[v]] for v in p.nodes[:k + 1]))
                    delay += sum(inst.link[e].delay_per_rate * r for e in links)
                    if delay > u.delay_budget + 1e-9 * max(1.0, u.delay_budget):
                        continue
                    lu = np.zeros(len(link_ids))
                    for e in links:
                        lu[lidx[e]] = r
                    cost = float(sum(inst.node[v].compute_cost_per_rate * w[nidx[v]] for v in p.nodes))
                    cost += sum(inst.link[e].cost_per_rate * r for e in links)
                    mask = 0
                    for v in p.nodes:
                        if w[nidx[v]] > 0:
                            mask |= 1 << nidx[v]
                    rows.append(((p.id, k), p, w, lu, cost, mask))
        tables.append(rows)

    n_masks = 1 << len(node_ids)
    theta_of_mask = np.zeros(n_masks)
    for i in range(len(node_ids)):
        theta_of_mask[np.arange(n_masks) & (1 << i) != 0] += theta[i]
    lam_pts = _lambda_grid(inst, lambda_step)
    if lam_pts.size == 0:
        raise ValueError("no lambda grid point satisfies the minimum fractions")

    # stack option tables as arrays
    arrs = []
    for u, rows in zip(inst.users, tables):
        s = sidx[u.slice_id]
        W = np.array([r_[2] for r_ in rows])
        L = np.array([r_[3] for r_ in rows])
        C = np.array([r_[4] for r_ in rows])
        A = np.array([0 if r_[0] is None else 1 for r_ in rows])
        M = np.array([r_[5] for r_ in rows], dtype=np.int64)
        arrs.append((s, W, L, C, A, M))

    shape = [len(rows) for rows in tables]
    best = (-math.inf, None, None)
    n_s = len(slice_ids)
    first, rest = arrs[0], arrs[1:]
    # enumerate the first user's options in a loop, the others by broadcasting
    grids = np.meshgrid(*[np.arange(n) for n in shape[1:]], indexing="ij") if rest else []
    rest_idx = [g.ravel() for g in grids]
    n_rest = rest_idx[0].size if rest else 1
    for i0 in range(shape[0]):
        node_load = np.zeros((n_rest, n_s, len(node_ids)))
        link_load = np.zeros((n_rest, n_s, len(link_ids)))
        node_load[:, first[0], :] += first[1][i0]
        link_load[:, first[0], :] += first[2][i0]
        cost = np.full(n_rest, first[3][i0])
        acc = np.full(n_rest, first[4][i0])
        mask = np.full(n_rest, first[5][i0], dtype=np.int64)
        for (s, W, L, C, A, M), idx in zip(rest, rest_idx):
            node_load[:, s, :] += W[idx]
            link_load[:, s, :] += L[idx]
            cost += C[idx]
            acc += A[idx]
            mask |= M[idx]
        need = np.zeros((n_rest, n_s))
        need = np.maximum(need, (node_load / cap_v).max(axis=2))
        if link_ids:
            need = np.maximum(need, (link_load / cap_e).max(axis=2))
        feasible = np.zeros(n_rest, dtype=bool)
        lam_choice = np.full(n_rest, -1)
        for j, lam in enumerate(lam_pts):
            ok = np.all(need <= lam[None, :] * (1 + 1e-12) + 1e-12, axis=1) & ~feasible
            lam_choice[ok] = j
            feasible |= ok
        if not feasible.any():
            continue
        obj = alpha * acc - cost - theta_of_mask[mask]
        obj[~feasible] = -math.inf
        j = int(np.argmax(obj))
        if obj[j] > best[0] + 1e-12:
            picks = [i0] + [int(ix[j]) for ix in rest_idx]
            best = (float(obj[j]), picks, lam_pts[lam_choice[j]])

    _, picks, lam = best
    alloc = Allocation(slice_fraction={m: float(lam[sidx[m]]) for m in slice_ids})
    for u, rows, pick in zip(inst.users, tables, picks):
        key, p, w, lu, cost, mask = rows[pick]
        if key is None:
            continue
        alloc.path_choice.add((u.id, p.id))
        for v in p.nodes:
            if w[nidx[v]] > 0:
                alloc.compute_share[(u.id, p.id, v)] = float(w[nidx[v]])
                alloc.node_active.add(v)
        for e in p.links[:key[1]]:
            alloc.link_use.add((u.id, p.id, e))
    return alloc, compute_report(inst, alloc, time.perf_counter() - t0, "oracle")
