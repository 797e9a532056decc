"""Water-filling heuristic (WF-JSRIN) and its random-path baseline (R-JSRIN).

Both share the same per-path water filling: walk the path from the attach
node towards the cloud, pour the remaining compute need into each node up to
the slice's residual capacity there, and once the need is met reserve the
user's rate on every link leading to that node.  Each candidate path is
tried against the committed state without touching it; only the selected
attempt is committed.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .model import Allocation, NetworkInstance, Path, SolveReport, UserRequest
from .validate import compute_report

ZERO = 1e-12
USER_ORDERS = ("input", "rate-ascending", "rate-descending")


def compute_slice_fractions(instance: NetworkInstance) -> Dict[int, float]:
    """Reserve each slice its minimum fraction, share the rest by demand."""
    demand = {m.id: sum(instance.user[u].rate_requirement for u in m.users) for m in instance.slices}
    total = sum(demand.values())
    free = 1.0 - sum(m.min_fraction for m in instance.slices)
    # one division instead of two keeps round numbers round (0.58, not 0.58000000000000007)
    return {m.id: (m.min_fraction * total + free * demand[m.id]) / total for m in instance.slices}


@dataclass
class SliceState:
    residual_node_capacity: Dict[Tuple[int, int], float]
    residual_link_capacity: Dict[Tuple[int, int], float]
    active_nodes: Set[int] = field(default_factory=set)

    @classmethod
    def initial(cls, instance: NetworkInstance, fractions: Dict[int, float]) -> "SliceState":
        return cls(
            {(n.id, m): lam * n.compute_capacity for n in instance.nodes for m, lam in fractions.items()},
            {(e.id, m): lam * e.capacity for e in instance.links for m, lam in fractions.items()},
        )


@dataclass
class PathAttempt:
    path_id: int
    remaining_need: float
    cost: float = 0.0
    delay: float = 0.0
    tentative_w: Dict[int, float] = field(default_factory=dict)
    tentative_links: Tuple[int, ...] = ()
    tentative_activations: Set[int] = field(default_factory=set)
    feasible: bool = False
    reason: str = ""


def attempt_path(user: UserRequest, path: Path, state: SliceState, instance: NetworkInstance) -> PathAttempt:
    """Water-fill ``user`` along ``path`` against a read-only ``state``."""
    m = user.slice_id
    r = user.rate_requirement
    att = PathAttempt(path.id, r)
    need = r
    for k, v in enumerate(path.nodes):
        node = instance.node[v]
        residual = state.residual_node_capacity[(v, m)]
        if need > ZERO and residual > ZERO:
            w = min(need, residual)
            need = max(0.0, need - residual)
            att.tentative_w[v] = w
            att.cost += w * node.compute_cost_per_rate
            att.delay += w * node.compute_delay_per_rate
            if v not in state.active_nodes:
                att.tentative_activations.add(v)
                att.cost += node.activation_cost
        if need <= ZERO:
            need = 0.0
            links = path.links_up_to(k)
            for e in links:
                if state.residual_link_capacity[(e, m)] < r:
                    return _reset(att, need, f"link {e} lacks capacity")
                link = instance.link[e]
                att.cost += r * link.cost_per_rate
                att.delay += r * link.delay_per_rate
            att.tentative_links = links
            if att.delay > user.delay_budget:
                return _reset(att, need, f"delay {att.delay:g} exceeds budget")
            att.remaining_need = 0.0
            att.feasible = True
            return att
    return _reset(att, need, "insufficient compute on path")


def _reset(att: PathAttempt, need: float, reason: str) -> PathAttempt:
    return PathAttempt(att.path_id, need, cost=att.cost, delay=att.delay, reason=reason)


def commit(att: PathAttempt, user: UserRequest, state: SliceState, alloc: Allocation) -> None:
    m = user.slice_id
    for v, w in att.tentative_w.items():
        state.residual_node_capacity[(v, m)] -= w
        alloc.compute_share[(user.id, att.path_id, v)] = w
    for e in att.tentative_links:
        state.residual_link_capacity[(e, m)] -= user.rate_requirement
        alloc.link_use.add((user.id, att.path_id, e))
    state.active_nodes |= att.tentative_activations
    alloc.node_active |= att.tentative_activations
    alloc.path_choice.add((user.id, att.path_id))


def _ordered_users(instance: NetworkInstance, slice_users: Sequence[int], order: str) -> List[UserRequest]:
    users = [instance.user[u] for u in slice_users]
    if order == "input":
        return users
    if order == "rate-ascending":
        return sorted(users, key=lambda u: (u.rate_requirement, u.id))
    if order == "rate-descending":
        return sorted(users, key=lambda u: (-u.rate_requirement, u.id))
    raise ValueError(f"unknown user order {order!r}; expected one of {USER_ORDERS}")


def _run(instance: NetworkInstance, pick, order: str, name: str) -> Tuple[Allocation, SolveReport, SliceState]:
    t0 = time.perf_counter()
    fractions = compute_slice_fractions(instance)
    state = SliceState.initial(instance, fractions)
    alloc = Allocation(slice_fraction=dict(fractions))
    reasons: Dict[int, str] = {}
    for s in instance.slices:
        for user in _ordered_users(instance, s.users, order):
            att = pick(user, instance.paths_of(user.id), state)
            if att is None:
                reasons[user.id] = "no feasible path"
                continue
            commit(att, user, state, alloc)
    elapsed = time.perf_counter() - t0
    return alloc, compute_report(instance, alloc, elapsed, name, reasons), state


def wf_jsrin(instance: NetworkInstance, user_order: str = "input") -> Tuple[Allocation, SolveReport]:
    """Water-filling joint slicing, routing and in-network computing.

    Every path of a user is water-filled against the committed state and
    the feasible attempt of least cost wins (ties: fewer links, then lower
    path id).
    """
    def pick(user, paths, state):
        best = None
        for p in paths:
            att = attempt_path(user, p, state, instance)
            if att.feasible:
                key = (att.cost, len(att.tentative_links), att.path_id)
                if best is None or key < best[0]:
                    best = (key, att)
        return None if best is None else best[1]

    alloc, report, _ = _run(instance, pick, user_order, "wf")
    return alloc, report


def r_jsrin(instance: NetworkInstance, seed: Optional[int] = 0,
            user_order: str = "input") -> Tuple[Allocation, SolveReport]:
    """Random baseline: paths visited in a seeded random order, first feasible wins.

    The permutation stream comes from ``numpy.random.Generator(PCG64(seed))``,
    one ``permutation`` call per user with at least one path.
    """
    rng = np.random.Generator(np.random.PCG64(seed))

    def pick(user, paths, state):
        if not paths:
            return None
        for i in rng.permutation(len(paths)):
            att = attempt_path(user, paths[int(i)], state, instance)
            if att.feasible:
                return att
        return None

    alloc, report, _ = _run(instance, pick, user_order, "random")
    return alloc, report
