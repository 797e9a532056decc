"""Seeded random instances with the evaluation parameter ranges.

Defaults: 12 nodes, cloud capacity U[200, 300], other node capacities
U[15, 50], link capacities U[100, 200], node and link delays U[1, 3], node,
link and activation costs U[1, 5], user rates U[10, 20], user delay budgets
U[500, 1000].  All draws come from one ``numpy.random.Generator(PCG64(seed))``
stream, so an instance is a pure function of ``(config, seed)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import networkx as nx
import numpy as np

from .model import Link, NetworkInstance, Node, Slice, UserRequest
from .pathgen import PathGenConfig, enumerate_paths

Range = Tuple[float, float]


class DisconnectedTopology(RuntimeError):
    pass


@dataclass(frozen=True)
class GenConfig:
    num_nodes: int = 12
    num_slices: int = 3
    users_per_slice: int = 5
    mean_degree: float = 3.0
    min_fraction: float = 0.1
    cloud_capacity: Range = (200.0, 300.0)
    node_capacity: Range = (15.0, 50.0)
    link_capacity: Range = (100.0, 200.0)
    delay: Range = (1.0, 3.0)
    cost: Range = (1.0, 5.0)
    user_rate: Range = (10.0, 20.0)
    user_delay: Range = (500.0, 1000.0)
    integer: bool = False
    paths: PathGenConfig = field(default_factory=PathGenConfig)
    alpha: Optional[float] = None
    max_topology_retries: int = 100

    def __post_init__(self):
        if self.num_nodes < 2:
            raise ValueError("need at least 2 nodes")
        if self.num_slices < 1 or self.users_per_slice < 1:
            raise ValueError("need at least one slice with one user")
        if self.num_slices * self.min_fraction >= 1.0:
            raise ValueError("num_slices * min_fraction must be < 1")
        if not 1.0 <= self.mean_degree <= self.num_nodes - 1:
            raise ValueError("mean_degree must lie in [1, num_nodes - 1]")


def _topology(cfg: GenConfig, rng: np.random.Generator) -> nx.Graph:
    n = cfg.num_nodes
    m = max(n - 1, int(round(n * cfg.mean_degree / 2)))
    m = min(m, n * (n - 1) // 2)
    for _ in range(cfg.max_topology_retries):
        g = nx.gnm_random_graph(n, m, seed=int(rng.integers(2**31)))
        if nx.is_connected(g):
            return g
    raise DisconnectedTopology(
        f"disconnected topology: no connected G({n}, {m}) after {cfg.max_topology_retries} draws")


def generate(cfg: GenConfig = GenConfig(), seed: int = 0) -> NetworkInstance:
    rng = np.random.Generator(np.random.PCG64(seed))

    def draw(rng_range: Range, size=None):
        lo, hi = rng_range
        if cfg.integer:
            return rng.integers(int(lo), int(hi), endpoint=True, size=size).astype(float)
        return rng.uniform(lo, hi, size=size)

    g = _topology(cfg, rng)
    n = cfg.num_nodes
    cloud = int(rng.integers(n))
    caps = draw(cfg.node_capacity, n)
    caps[cloud] = draw(cfg.cloud_capacity)
    delays = draw(cfg.delay, n)
    costs = draw(cfg.cost, n)
    activation = draw(cfg.cost, n)
    nodes = tuple(
        Node(i, float(caps[i]), float(delays[i]), float(costs[i]), float(activation[i]), i == cloud)
        for i in range(n)
    )

    edges = sorted(tuple(sorted(e)) for e in g.edges)
    links = tuple(
        Link(j, (int(a), int(b)), float(draw(cfg.link_capacity)), float(draw(cfg.delay)), float(draw(cfg.cost)))
        for j, (a, b) in enumerate(edges)
    )

    non_cloud = [i for i in range(n) if i != cloud]
    users = []
    slices = []
    uid = 0
    for m in range(cfg.num_slices):
        members = []
        for _ in range(cfg.users_per_slice):
            attach = int(non_cloud[rng.integers(len(non_cloud))])
            users.append(UserRequest(uid, m, attach, float(draw(cfg.user_rate)), float(draw(cfg.user_delay))))
            members.append(uid)
            uid += 1
        slices.append(Slice(m, tuple(members), cfg.min_fraction))

    inst = NetworkInstance(nodes, links, tuple(slices), tuple(users), {}, cfg.alpha)
    return inst.replace(paths=enumerate_paths(inst, cfg.paths))


def scale_capacity(inst: NetworkInstance, cloud: float = 1.0, link: float = 1.0, node: float = 1.0) -> NetworkInstance:
    """Copy of ``inst`` with cloud, link and non-cloud node capacities multiplied."""
    nodes = tuple(replace(n, compute_capacity=n.compute_capacity * (cloud if n.is_cloud else node))
                  for n in inst.nodes)
    links = tuple(replace(e, capacity=e.capacity * link) for e in inst.links)
    return inst.replace(nodes=nodes, links=links)


def keep_users(inst: NetworkInstance, keep) -> NetworkInstance:
    """Restrict ``inst`` to the user ids in ``keep``; emptied slices are dropped."""
    keep = set(keep)
    users = tuple(u for u in inst.users if u.id in keep)
    slices = tuple(replace(s, users=tuple(u for u in s.users if u in keep)) for s in inst.slices)
    slices = tuple(s for s in slices if s.users)
    paths = {u: ps for u, ps in inst.paths.items() if u in keep}
    return inst.replace(users=users, slices=slices, paths=paths)


def truncate_users(inst: NetworkInstance, count: int) -> NetworkInstance:
    """Keep the first ``count`` users in input order."""
    return keep_users(inst, [u.id for u in inst.users[:count]])
