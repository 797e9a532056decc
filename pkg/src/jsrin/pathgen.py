"""Enumerate the fixed candidate path set from each user to the cloud node.

Paths are returned shortest first (hop count), ties broken by the
lexicographic order of their node-id sequences.  Enumeration grows the hop
limit one step at a time and runs a depth-first search that only extends a
partial path while the cloud is still reachable within the remaining hops,
so the first ``K`` paths are found without listing every simple path.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .model import LinkId, NetworkInstance, NodeId, Path, UserId


class UnreachableCloud(ValueError):
    pass


@dataclass(frozen=True)
class PathGenConfig:
    max_paths_per_user: int = 4
    max_hops: Optional[int] = None

    def __post_init__(self):
        if self.max_paths_per_user < 1:
            raise ValueError("max_paths_per_user must be >= 1")
        if self.max_hops is not None and self.max_hops < 1:
            raise ValueError("max_hops must be >= 1 or None")


def adjacency(instance: NetworkInstance) -> Dict[NodeId, List[Tuple[NodeId, LinkId]]]:
    adj: Dict[NodeId, List[Tuple[NodeId, LinkId]]] = {n.id: [] for n in instance.nodes}
    for e in instance.links:
        a, b = e.endpoints
        adj[a].append((b, e.id))
        adj[b].append((a, e.id))
    for nbrs in adj.values():
        # parallel links: keep the lowest link id per neighbour
        nbrs.sort()
    return adj


def _hop_distance(adj, target: NodeId) -> Dict[NodeId, int]:
    dist = {target: 0}
    queue = deque([target])
    while queue:
        v = queue.popleft()
        for nb, _ in adj[v]:
            if nb not in dist:
                dist[nb] = dist[v] + 1
                queue.append(nb)
    return dist


def k_shortest_simple_paths(adj, source: NodeId, target: NodeId, k: int,
                            max_hops: Optional[int] = None) -> List[Tuple[Tuple[NodeId, ...], Tuple[LinkId, ...]]]:
    dist = _hop_distance(adj, target)
    if source not in dist:
        return []
    limit = len(adj) - 1 if max_hops is None else min(max_hops, len(adj) - 1)
    found: List[Tuple[Tuple[NodeId, ...], Tuple[LinkId, ...]]] = []

    def extend(nodes: List[NodeId], links: List[LinkId], on_path: set, hops_left: int):
        v = nodes[-1]
        if v == target:
            if hops_left == 0:
                found.append((tuple(nodes), tuple(links)))
            return
        seen_nb = set()
        for nb, e in adj[v]:
            if nb in on_path or nb in seen_nb or dist.get(nb, limit + 1) > hops_left - 1:
                continue
            seen_nb.add(nb)
            nodes.append(nb)
            links.append(e)
            on_path.add(nb)
            extend(nodes, links, on_path, hops_left - 1)
            on_path.discard(nb)
            nodes.pop()
            links.pop()
            if len(found) >= k:
                return

    for hops in range(dist[source], limit + 1):
        extend([source], [], {source}, hops)
        if len(found) >= k:
            break
    return found[:k]


def enumerate_paths(instance: NetworkInstance, config: PathGenConfig = PathGenConfig(),
                    first_path_id: int = 0) -> Dict[UserId, Tuple[Path, ...]]:
    """Up to ``config.max_paths_per_user`` loop-free paths per user.

    Path ids are assigned consecutively in user order starting at
    ``first_path_id``.  Raises :class:`UnreachableCloud` naming the first user
    that has no path within the hop limit.
    """
    adj = adjacency(instance)
    cloud = instance.cloud
    out: Dict[UserId, Tuple[Path, ...]] = {}
    pid = first_path_id
    for u in instance.users:
        found = k_shortest_simple_paths(adj, u.attach_node, cloud,
                                        config.max_paths_per_user, config.max_hops)
        if not found:
            raise UnreachableCloud(f"unreachable cloud for user {u.id} (attach node {u.attach_node})")
        paths = []
        for nodes, links in found:
            paths.append(Path(pid, u.id, nodes, links))
            pid += 1
        out[u.id] = tuple(paths)
    return out


def with_paths(instance: NetworkInstance, config: PathGenConfig = PathGenConfig()) -> NetworkInstance:
    return instance.replace(paths=enumerate_paths(instance, config))
