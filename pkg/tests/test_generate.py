import math

import numpy as np
import pytest

from jsrin.generate import DisconnectedTopology, GenConfig, generate, keep_users, scale_capacity, truncate_users
from jsrin.model import validate_instance


def _within(x, lo, hi):
    return lo <= x <= hi


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_default_ranges(seed):
    cfg = GenConfig()
    inst = generate(cfg, seed)
    assert validate_instance(inst) == []
    assert len(inst.nodes) == 12 and len(inst.slices) == 3 and len(inst.users) == 15
    for n in inst.nodes:
        assert _within(n.compute_capacity, *(cfg.cloud_capacity if n.is_cloud else cfg.node_capacity))
        assert _within(n.compute_delay_per_rate, *cfg.delay)
        assert _within(n.compute_cost_per_rate, *cfg.cost)
        assert _within(n.activation_cost, *cfg.cost)
    for e in inst.links:
        assert _within(e.capacity, *cfg.link_capacity)
        assert _within(e.delay_per_rate, *cfg.delay) and _within(e.cost_per_rate, *cfg.cost)
    for u in inst.users:
        assert _within(u.rate_requirement, *cfg.user_rate) and _within(u.delay_budget, *cfg.user_delay)
        assert not inst.node[u.attach_node].is_cloud
    assert all(s.min_fraction == 0.1 for s in inst.slices)


def test_deterministic():
    assert generate(seed=9) == generate(seed=9)
    assert generate(seed=9) != generate(seed=10)


def test_integer_mode():
    inst = generate(GenConfig(integer=True), 4)
    assert all(float(n.compute_capacity).is_integer() for n in inst.nodes)
    assert all(float(u.rate_requirement).is_integer() for u in inst.users)


def test_node_capacity_mean():
    caps = []
    seed = 0
    while len(caps) < 1000:
        caps += [n.compute_capacity for n in generate(seed=seed).nodes if not n.is_cloud]
        seed += 1
    caps = np.array(caps[:1000])
    sigma = (50 - 15) / math.sqrt(12) / math.sqrt(len(caps))
    assert abs(caps.mean() - 32.5) < 3 * sigma


def test_mean_degree():
    degs = []
    for seed in range(20):
        inst = generate(seed=seed)
        degs.append(2 * len(inst.links) / len(inst.nodes))
    assert np.mean(degs) == pytest.approx(3.0, abs=0.1)


def test_config_checks():
    with pytest.raises(ValueError):
        GenConfig(num_slices=10, min_fraction=0.1)
    with pytest.raises(ValueError):
        GenConfig(num_nodes=1)


def test_disconnected_gives_up():
    # a forest with n - 1 edges is only rarely a tree: force the retry limit
    with pytest.raises(DisconnectedTopology):
        generate(GenConfig(num_nodes=40, mean_degree=1.0, max_topology_retries=2), 0)


def test_scale_and_truncate():
    inst = generate(seed=2)
    big = scale_capacity(inst, cloud=2, link=3)
    assert big.node[inst.cloud].compute_capacity == 2 * inst.node[inst.cloud].compute_capacity
    assert big.nodes[0].compute_capacity == inst.nodes[0].compute_capacity or inst.nodes[0].is_cloud
    assert big.links[0].capacity == 3 * inst.links[0].capacity
    small = truncate_users(inst, 4)
    assert [u.id for u in small.users] == [0, 1, 2, 3]
    assert validate_instance(small) == []
    one = keep_users(inst, [14])
    assert [s.id for s in one.slices] == [2]
    assert validate_instance(one) == []
