"""Domain types for the joint slicing / routing / in-network computing problem.

Every quantity is a float in "rate units": capacities, compute shares and link
loads share one unit, delays and energy costs are expressed per rate unit.
The graph is undirected; a :class:`Path` fixes a direction from the user's
attach node towards the cloud node.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path as FsPath
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

NodeId = int
LinkId = int
UserId = int
SliceId = int
PathId = int

#: big-M rule used by the MILP builder; "tight" or a positive constant
BigMPolicy = Union[str, float]


@dataclass(frozen=True)
class Node:
    id: NodeId
    compute_capacity: float
    compute_delay_per_rate: float
    compute_cost_per_rate: float
    activation_cost: float
    is_cloud: bool = False


@dataclass(frozen=True)
class Link:
    id: LinkId
    endpoints: Tuple[NodeId, NodeId]
    capacity: float
    delay_per_rate: float
    cost_per_rate: float


@dataclass(frozen=True)
class UserRequest:
    id: UserId
    slice_id: SliceId
    attach_node: NodeId
    rate_requirement: float
    delay_budget: float


@dataclass(frozen=True)
class Slice:
    id: SliceId
    users: Tuple[UserId, ...]
    min_fraction: float = 0.0


@dataclass(frozen=True)
class Path:
    """A simple path from a user's attach node to the cloud node.

    ``prefix_links[v]`` holds the links travelled from the attach node up to
    ``v``; it is empty for the attach node itself.
    """

    id: PathId
    user_id: UserId
    nodes: Tuple[NodeId, ...]
    links: Tuple[LinkId, ...]
    prefix_links: Mapping[NodeId, FrozenSet[LinkId]] = field(default=None, compare=True)  # type: ignore[assignment]

    def __post_init__(self):
        if self.prefix_links is None:
            object.__setattr__(self, "prefix_links", prefix_map(self.nodes, self.links))

    @property
    def hops(self) -> int:
        return len(self.links)

    def links_up_to(self, index: int) -> Tuple[LinkId, ...]:
        """Links used when the farthest compute-bearing node is ``nodes[index]``."""
        return self.links[:index]


def prefix_map(nodes: Sequence[NodeId], links: Sequence[LinkId]) -> Dict[NodeId, FrozenSet[LinkId]]:
    return {v: frozenset(links[:k]) for k, v in enumerate(nodes)}


@dataclass(frozen=True)
class NetworkInstance:
    nodes: Tuple[Node, ...]
    links: Tuple[Link, ...]
    slices: Tuple[Slice, ...]
    users: Tuple[UserRequest, ...]
    paths: Mapping[UserId, Tuple[Path, ...]]
    alpha: Optional[float] = None
    big_m_policy: BigMPolicy = "tight"

    @cached_property
    def node(self) -> Dict[NodeId, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def link(self) -> Dict[LinkId, Link]:
        return {e.id: e for e in self.links}

    @cached_property
    def user(self) -> Dict[UserId, UserRequest]:
        return {u.id: u for u in self.users}

    @cached_property
    def slice(self) -> Dict[SliceId, Slice]:
        return {m.id: m for m in self.slices}

    @cached_property
    def path(self) -> Dict[PathId, Path]:
        return {p.id: p for ps in self.paths.values() for p in ps}

    @cached_property
    def cloud(self) -> NodeId:
        clouds = [n.id for n in self.nodes if n.is_cloud]
        if len(clouds) != 1:
            raise ValueError(f"expected exactly one cloud node, found {len(clouds)}")
        return clouds[0]

    def paths_of(self, user_id: UserId) -> Tuple[Path, ...]:
        return tuple(self.paths.get(user_id, ()))

    @cached_property
    def objective_weight(self) -> float:
        """``alpha`` if set, otherwise an acceptance-dominant default."""
        return self.alpha if self.alpha is not None else default_alpha(self)

    def replace(self, **changes) -> "NetworkInstance":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return NetworkInstance(**kw)


def worst_case_cost(instance: NetworkInstance, user_id: UserId) -> float:
    """Upper bound on the cost one accepted user can add to the objective."""
    u = instance.user[user_id]
    worst = 0.0
    for p in instance.paths_of(user_id):
        compute = u.rate_requirement * max(instance.node[v].compute_cost_per_rate for v in p.nodes)
        activation = sum(instance.node[v].activation_cost for v in p.nodes)
        links = u.rate_requirement * sum(instance.link[e].cost_per_rate for e in p.links)
        worst = max(worst, compute + activation + links)
    return worst


def default_alpha(instance: NetworkInstance) -> float:
    # one more acceptance always outweighs any cost difference
    if not instance.users:
        return 1.0
    per_user = max(worst_case_cost(instance, u.id) for u in instance.users)
    return 1.0 + per_user * len(instance.users)


@dataclass
class Allocation:
    """A full solution.

    Binary variables are stored as the set of index tuples at value one:
    ``path_choice`` holds ``(user, path)``, ``link_use`` holds
    ``(user, path, link)`` and ``node_active`` holds node ids.
    """

    path_choice: set = field(default_factory=set)
    compute_share: Dict[Tuple[UserId, PathId, NodeId], float] = field(default_factory=dict)
    link_use: set = field(default_factory=set)
    node_active: set = field(default_factory=set)
    slice_fraction: Dict[SliceId, float] = field(default_factory=dict)

    def chosen_path(self, user_id: UserId) -> Optional[PathId]:
        chosen = sorted(p for (u, p) in self.path_choice if u == user_id)
        return chosen[0] if chosen else None

    def accepted_users(self) -> List[UserId]:
        return sorted({u for (u, _) in self.path_choice})

    def copy(self) -> "Allocation":
        return Allocation(
            set(self.path_choice),
            dict(self.compute_share),
            set(self.link_use),
            set(self.node_active),
            dict(self.slice_fraction),
        )

    def to_dict(self) -> dict:
        return {
            "path_choice": [list(k) for k in sorted(self.path_choice)],
            "compute_share": [[u, p, v, w] for (u, p, v), w in sorted(self.compute_share.items())],
            "link_use": [list(k) for k in sorted(self.link_use)],
            "node_active": sorted(self.node_active),
            "slice_fraction": {str(m): lam for m, lam in sorted(self.slice_fraction.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Allocation":
        return cls(
            {tuple(k) for k in d.get("path_choice", [])},
            {(int(u), int(p), int(v)): float(w) for u, p, v, w in d.get("compute_share", [])},
            {tuple(k) for k in d.get("link_use", [])},
            set(d.get("node_active", [])),
            {int(m): float(lam) for m, lam in d.get("slice_fraction", {}).items()},
        )


@dataclass
class SolveReport:
    objective: float
    accepted: int
    total_cost: float
    compute_cost: float
    activation_cost: float
    link_cost: float
    bandwidth_usage: float
    per_user_status: Dict[UserId, str]
    wall_clock: float = 0.0
    solver: str = ""
    details: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["details"] = dict(self.details)
        d["per_user_status"] = {str(k): v for k, v in self.per_user_status.items()}
        return d


# --------------------------------------------------------------------------
# validation

def validate_instance(instance: NetworkInstance) -> List[str]:
    """Return every invariant violation as a message; an empty list means ok."""
    out: List[str] = []
    node_ids = [n.id for n in instance.nodes]
    if len(set(node_ids)) != len(node_ids):
        out.append("duplicate node ids")
    nodes = {n.id: n for n in instance.nodes}

    clouds = [n.id for n in instance.nodes if n.is_cloud]
    if len(clouds) != 1:
        out.append(f"exactly one cloud node required, found {len(clouds)}: {clouds}")
    for n in instance.nodes:
        if not n.compute_capacity > 0:
            out.append(f"node {n.id}: compute_capacity must be > 0")
        for name in ("compute_delay_per_rate", "compute_cost_per_rate", "activation_cost"):
            if getattr(n, name) < 0:
                out.append(f"node {n.id}: {name} must be >= 0")

    links = {}
    for e in instance.links:
        if e.id in links:
            out.append(f"duplicate link id {e.id}")
        links[e.id] = e
        a, b = e.endpoints
        if a == b or a not in nodes or b not in nodes:
            out.append(f"link {e.id}: endpoints {e.endpoints} must be distinct existing nodes")
        if not e.capacity > 0:
            out.append(f"link {e.id}: capacity must be > 0")
        if e.delay_per_rate < 0 or e.cost_per_rate < 0:
            out.append(f"link {e.id}: delay and cost must be >= 0")

    users = {u.id: u for u in instance.users}
    slices = {m.id: m for m in instance.slices}
    for u in instance.users:
        if u.slice_id not in slices:
            out.append(f"user {u.id}: unknown slice {u.slice_id}")
        if u.attach_node not in nodes:
            out.append(f"user {u.id}: unknown attach node {u.attach_node}")
        elif nodes[u.attach_node].is_cloud:
            out.append(f"user {u.id}: attach node is the cloud node")
        if not u.rate_requirement > 0:
            out.append(f"user {u.id}: rate_requirement must be > 0")
        if not u.delay_budget > 0:
            out.append(f"user {u.id}: delay_budget must be > 0")

    eps_total = 0.0
    for m in instance.slices:
        if not 0.0 <= m.min_fraction < 1.0:
            out.append(f"slice {m.id}: min_fraction must lie in [0, 1)")
        eps_total += m.min_fraction
        if not m.users:
            out.append(f"slice {m.id}: no users")
        for uid in m.users:
            if uid not in users:
                out.append(f"slice {m.id}: unknown user {uid}")
            elif users[uid].slice_id != m.id:
                out.append(f"slice {m.id}: user {uid} belongs to slice {users[uid].slice_id}")
    if instance.slices and eps_total >= 1.0:
        out.append(f"slice fractions infeasible: sum of min_fraction = {eps_total:g} >= 1")

    path_ids = set()
    for uid, ps in instance.paths.items():
        if uid not in users:
            out.append(f"paths given for unknown user {uid}")
            continue
        for p in ps:
            if p.id in path_ids:
                out.append(f"duplicate path id {p.id}")
            path_ids.add(p.id)
            out.extend(_path_violations(p, users[uid], nodes, links, clouds))

    if instance.alpha is not None and not instance.alpha > 0:
        out.append("alpha must be > 0")
    bm = instance.big_m_policy
    if not (bm == "tight" or (isinstance(bm, (int, float)) and not isinstance(bm, bool) and bm > 0)):
        out.append(f"big_m_policy must be 'tight' or a positive number, got {bm!r}")
    return out


def _path_violations(p: Path, u: UserRequest, nodes, links, clouds) -> List[str]:
    out = []
    tag = f"path {p.id}"
    if p.user_id != u.id:
        out.append(f"{tag}: user_id {p.user_id} does not match owner {u.id}")
    if not p.nodes or p.nodes[0] != u.attach_node:
        out.append(f"{tag}: must start at attach node {u.attach_node}")
    if not p.nodes or p.nodes[-1] not in clouds:
        out.append(f"{tag}: must end at the cloud node")
    if len(set(p.nodes)) != len(p.nodes):
        out.append(f"{tag}: repeats a node")
    if len(p.links) != max(len(p.nodes) - 1, 0):
        out.append(f"{tag}: expected {len(p.nodes) - 1} links, got {len(p.links)}")
    else:
        for i, e in enumerate(p.links):
            if e not in links:
                out.append(f"{tag}: unknown link {e}")
            elif set(links[e].endpoints) != {p.nodes[i], p.nodes[i + 1]}:
                out.append(f"{tag}: link {e} does not join {p.nodes[i]} and {p.nodes[i + 1]}")
    if dict(p.prefix_links) != prefix_map(p.nodes, p.links):
        out.append(f"{tag}: prefix_links inconsistent with nodes/links")
    return out


# --------------------------------------------------------------------------
# serialization

FORMAT_VERSION = 1


def instance_to_dict(instance: NetworkInstance) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "nodes": [n.__dict__ for n in instance.nodes],
        "links": [dict(e.__dict__, endpoints=list(e.endpoints)) for e in instance.links],
        "slices": [dict(m.__dict__, users=list(m.users)) for m in instance.slices],
        "users": [u.__dict__ for u in instance.users],
        "paths": [
            {
                "id": p.id,
                "user_id": p.user_id,
                "nodes": list(p.nodes),
                "links": list(p.links),
                "prefix_links": {str(v): sorted(s) for v, s in p.prefix_links.items()},
            }
            for uid in sorted(instance.paths)
            for p in instance.paths[uid]
        ],
        "alpha": instance.alpha,
        "big_m_policy": instance.big_m_policy,
    }


def instance_from_dict(d: dict) -> NetworkInstance:
    if d.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
        raise ValueError(f"unsupported instance format_version {d['format_version']}")
    nodes = tuple(Node(**n) for n in d["nodes"])
    links = tuple(Link(**dict(e, endpoints=tuple(e["endpoints"]))) for e in d["links"])
    slices = tuple(Slice(**dict(m, users=tuple(m["users"]))) for m in d["slices"])
    users = tuple(UserRequest(**u) for u in d["users"])
    paths: Dict[UserId, List[Path]] = {u.id: [] for u in users}
    for p in d.get("paths", []):
        prefix = {int(v): frozenset(s) for v, s in p["prefix_links"].items()}
        paths.setdefault(p["user_id"], []).append(
            Path(p["id"], p["user_id"], tuple(p["nodes"]), tuple(p["links"]), prefix)
        )
    return NetworkInstance(
        nodes, links, slices, users,
        {u: tuple(ps) for u, ps in paths.items()},
        d.get("alpha"), d.get("big_m_policy", "tight"),
    )


def save_instance(instance: NetworkInstance, path) -> None:
    FsPath(path).write_text(json.dumps(instance_to_dict(instance), indent=1))


def load_instance(path) -> NetworkInstance:
    return instance_from_dict(json.loads(FsPath(path).read_text()))


def isclose(a: float, b: float, tol: float = 1e-9) -> bool:
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)
