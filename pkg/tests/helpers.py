"""Small hand-built instances and a random generator for oracle-sized cases."""
from __future__ import annotations

import numpy as np

from jsrin.model import Link, NetworkInstance, Node, Slice, UserRequest
from jsrin.pathgen import PathGenConfig, enumerate_paths


def make_instance(nodes, edges, users, eps=None, k=4, max_hops=None, alpha=None):
    """Build an instance from plain tuples.

    nodes: (capacity, delay, cost, theta, is_cloud) per node, ids 0..n-1
    edges: (a, b, capacity, delay, cost), ids 0..m-1
    users: (slice, attach, rate, budget), ids 0..k-1
    eps: slice id -> min fraction (slices default to those used, eps 0)
    """
    ns = tuple(Node(i, *spec) for i, spec in enumerate(nodes))
    ls = tuple(Link(j, (a, b), cap, d, c) for j, (a, b, cap, d, c) in enumerate(edges))
    us = tuple(UserRequest(i, m, v, r, b) for i, (m, v, r, b) in enumerate(users))
    slice_ids = sorted(set(eps or {}) | {u.slice_id for u in us})
    eps = eps or {}
    sl = tuple(Slice(m, tuple(u.id for u in us if u.slice_id == m), eps.get(m, 0.0)) for m in slice_ids)
    inst = NetworkInstance(ns, ls, sl, us, {}, alpha)
    return inst.replace(paths=enumerate_paths(inst, PathGenConfig(k, max_hops)))


def one_user(attach_cap=300.0, cloud_cap=300.0, rate=10.0, budget=1000.0, attach=(1.0, 1.0, 1.0),
             cloud=(1.0, 1.0, 1.0), link=(100.0, 1.0, 1.0)):
    """attach node 0 -- link 0 -- cloud node 1; one user on node 0."""
    return make_instance(
        [(attach_cap, *attach, False), (cloud_cap, *cloud, True)],
        [(0, 1, *link)],
        [(0, 0, rate, budget)],
    )


def oracle_instance(seed, n_users=3, n_slices=1, tight=True, loose_delay=True):
    """Random instance small enough for the brute-force oracle.

    Integer rates and capacities; at most 2 paths of at most 3 hops per user.
    With one slice and loose delays the continuous optimum has integral
    compute shares, so the unit-grid oracle contains it.  ``tight=False``
    makes every capacity slack, which keeps that true for several slices.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    n = int(rng.integers(4, 6))
    cloud = 0
    edges = set()
    depth = {0: 0}
    for v in range(1, n):  # random spanning tree rooted at the cloud, depth <= 3
        parent = int(rng.choice([u for u in depth if depth[u] < 3]))
        depth[v] = depth[parent] + 1
        edges.add((parent, v))
    for _ in range(int(rng.integers(1, 3))):
        a, b = sorted(int(x) for x in rng.choice(n, 2, replace=False))
        edges.add((a, b))
    edges = sorted(edges)
    rates = [int(rng.integers(2, 6)) for _ in range(n_users)]
    nodes = []
    for v in range(n):
        if not tight:  # no capacity can bind for any slice fraction >= 0.1
            cap = 200.0
        elif v == cloud:
            cap = float(rng.integers(3, 12))
        else:
            cap = float(rng.integers(1, max(rates) + 1))
        nodes.append((cap, float(rng.integers(1, 4)), float(rng.integers(1, 6)), float(rng.integers(1, 6)), v == cloud))
    links = [(a, b, float(rng.integers(4, 12) if tight else 200), float(rng.integers(1, 4)),
              float(rng.integers(1, 6))) for a, b in edges]
    users = []
    for i, r in enumerate(rates):
        attach = int(rng.integers(1, n))
        budget = 1000.0 if loose_delay else float(rng.integers(10, 40))
        users.append((i % n_slices, attach, float(r), budget))
    eps = {m: 0.1 for m in range(n_slices)} if n_slices > 1 else None
    return make_instance(nodes, links, users, eps=eps, k=2, max_hops=3)


def mutation_case():
    """A feasible two-slice allocation and, per constraint tag, a mutation
    that violates that constraint and nothing else.

    Nodes: 0 attach (cap 40), 1 mid (cap 10), 2 cloud (cap 300, delay 5).
    Links: 0 = (0,1), 1 = (1,2), 2 = (0,2) with capacity 10.
    User 0 (slice 0, rate 10) computes on node 0; user 1 (slice 1, rate 0.25,
    delay budget 1) computes on node 1.  lambda = (0.8, 0.2), eps = (0, 0.1).
    """
    from jsrin.model import Allocation

    inst = make_instance(
        [(40, 1, 1, 1, False), (10, 1, 1, 1, False), (300, 5, 1, 1, True)],
        [(0, 1, 100, 1, 1), (1, 2, 100, 1, 1), (0, 2, 10, 1, 1)],
        [(0, 0, 10, 200), (1, 1, 0.25, 1)],
        eps={0: 0.0, 1: 0.1},
    )
    p_direct, p_mid = [p.id for p in inst.paths_of(0)]  # [0,2], [0,1,2]
    q_direct = inst.paths_of(1)[0].id  # [1,2]
    base = Allocation({(0, p_direct), (1, q_direct)}, {(0, p_direct, 0): 10.0, (1, q_direct, 1): 0.25},
                      set(), {0, 1}, {0: 0.8, 1: 0.2})
    m = {}

    a = base.copy()
    a.path_choice.add((0, p_mid))
    a.compute_share[(0, p_mid, 0)] = 10.0
    m["C1"] = a

    a = base.copy()
    a.compute_share[(0, p_direct, 0)] = 9.0
    m["C2"] = a

    a = base.copy()
    del a.compute_share[(0, p_direct, 0)]
    a.compute_share[(0, p_direct, 2)] = 10.0
    a.node_active.add(2)
    m["C3"] = a

    a = base.copy()
    a.node_active.discard(0)
    m["C4"] = a

    a = base.copy()
    a.path_choice = {(0, p_mid), (1, q_direct)}
    a.compute_share = {(0, p_mid, 1): 10.0, (1, q_direct, 1): 0.25}
    a.link_use = {(0, p_mid, 0)}
    m["C5"] = a

    a = base.copy()
    a.link_use.add((0, p_direct, 2))
    m["C6"] = a

    a = base.copy()
    a.slice_fraction = {0: 0.95, 1: 0.05}
    m["C7"] = a

    a = base.copy()
    a.slice_fraction = {0: 0.9, 1: 0.2}
    m["C8"] = a

    a = base.copy()
    del a.compute_share[(1, q_direct, 1)]
    a.compute_share[(1, q_direct, 2)] = 0.25
    a.link_use.add((1, q_direct, 1))
    a.node_active.add(2)
    m["C9"] = a
    return inst, base, m
