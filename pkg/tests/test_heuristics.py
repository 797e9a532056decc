import copy
from dataclasses import replace

import pytest
from helpers import make_instance, one_user, oracle_instance

from jsrin.exact import brute_force_oracle, solve_exact
from jsrin.generate import GenConfig, generate, scale_capacity
from jsrin.heuristics import SliceState, _run, attempt_path, compute_slice_fractions, r_jsrin, wf_jsrin
from jsrin.pathgen import PathGenConfig
from jsrin.validate import check_allocation


def _slices(demands, eps):
    nodes = [(50, 1, 1, 1, False), (300, 1, 1, 1, True)]
    users = [(m, 0, d, 1000) for m, d in enumerate(demands)]
    return make_instance(nodes, [(0, 1, 100, 1, 1)], users, eps={m: eps for m in range(len(demands))})


def test_fractions_two_slices():
    lam = compute_slice_fractions(_slices([60, 40], 0.1))
    assert lam == {0: 0.58, 1: 0.42}


def test_fractions_single_slice():
    assert compute_slice_fractions(_slices([7], 0.3)) == {0: 1.0}


def test_fractions_symmetric():
    assert compute_slice_fractions(_slices([5, 5, 5], 0.0)) == {0: 1 / 3, 1: 1 / 3, 2: 1 / 3}


def _state(inst):
    return SliceState.initial(inst, compute_slice_fractions(inst))


def test_attempt_single_node_sufficient():
    inst = one_user(attach_cap=10.0, attach=(2.0, 1.0, 1.0))
    att = attempt_path(inst.users[0], inst.paths_of(0)[0], _state(inst), inst)
    assert att.feasible
    assert att.tentative_w == {0: 10.0} and att.tentative_links == ()
    assert att.delay == 10 * 2.0


def test_attempt_spills_to_cloud():
    inst = one_user(attach_cap=4.0, attach=(2.0, 1.0, 1.0), cloud=(3.0, 1.0, 1.0), link=(10.0, 5.0, 1.0))
    att = attempt_path(inst.users[0], inst.paths_of(0)[0], _state(inst), inst)
    assert att.feasible
    assert att.tentative_w == {0: 4.0, 1: 6.0}
    assert att.tentative_links == (0,)
    assert att.delay == 4 * 2.0 + 6 * 3.0 + 10 * 5.0
    assert att.tentative_activations == {0, 1}
    # the oracle can only do at least as well on this one-user instance
    _, orep = brute_force_oracle(inst)
    _, wrep = wf_jsrin(inst)
    assert orep.objective >= wrep.objective - 1e-9


def test_attempt_link_too_small():
    inst = one_user(attach_cap=4.0, link=(5.0, 1.0, 1.0))
    state = _state(inst)
    before = copy.deepcopy(state)
    att = attempt_path(inst.users[0], inst.paths_of(0)[0], state, inst)
    assert not att.feasible
    assert att.tentative_w == {} and att.tentative_links == ()
    assert state == before


def test_attempt_is_read_only():
    inst = generate(seed=7)
    state = _state(inst)
    before = copy.deepcopy(state)
    for u in inst.users:
        for p in inst.paths_of(u.id):
            attempt_path(u, p, state, inst)
    assert state == before


def test_activation_charged_once():
    inst = make_instance([(100, 1, 1, 7, False), (300, 1, 1, 1, True)], [(0, 1, 100, 1, 1)],
                         [(0, 0, 10, 1000), (0, 0, 10, 1000)])
    alloc, rep = wf_jsrin(inst)
    assert rep.accepted == 2
    assert rep.activation_cost == 7.0 and rep.total_cost == 20 + 7


def test_short_cheap_path_chosen():
    # triangle: direct link to the cloud, or a detour through node 1
    inst = make_instance([(1, 1, 1, 1, False), (1, 1, 1, 1, False), (300, 1, 1, 1, True)],
                         [(0, 1, 100, 1, 1), (1, 2, 100, 1, 1), (0, 2, 100, 1, 1)], [(0, 0, 10, 1000)])
    alloc, _ = wf_jsrin(inst)
    assert alloc.chosen_path(0) == inst.paths_of(0)[0].id
    assert inst.paths_of(0)[0].nodes == (0, 2)


def test_cheaper_than_cloud_only_when_edge_is_cheap():
    inst = one_user(attach=(1.0, 1.0, 1.0), cloud=(1.0, 3.0, 1.0), link=(100.0, 1.0, 2.0))
    _, wf = wf_jsrin(inst)
    _, oc = solve_exact(inst, "opt_c")
    assert wf.accepted == oc.accepted == 1
    assert wf.total_cost < oc.total_cost


@pytest.mark.parametrize("seed", range(10))
def test_residuals_conserved(seed):
    inst = generate(seed=seed)
    alloc, _, state = _run(inst, lambda u, ps, st: next(
        (a for a in (attempt_path(u, p, st, inst) for p in ps) if a.feasible), None), "input", "t")
    lam = compute_slice_fractions(inst)
    for n in inst.nodes:
        for m in lam:
            used = sum(w for (u, p, v), w in alloc.compute_share.items() if v == n.id and inst.user[u].slice_id == m)
            assert state.residual_node_capacity[(n.id, m)] == pytest.approx(lam[m] * n.compute_capacity - used)
            assert state.residual_node_capacity[(n.id, m)] >= -1e-9
    for e in inst.links:
        for m in lam:
            used = sum(inst.user[u].rate_requirement for (u, p, l) in alloc.link_use
                       if l == e.id and inst.user[u].slice_id == m)
            assert state.residual_link_capacity[(e.id, m)] == pytest.approx(lam[m] * e.capacity - used)


@pytest.mark.parametrize("k", [-2, 1, 3])
def test_choice_invariant_under_cost_scaling(k):
    inst = generate(seed=11)
    f = 2.0 ** k
    scaled = inst.replace(
        nodes=tuple(replace(n, compute_cost_per_rate=n.compute_cost_per_rate * f, activation_cost=n.activation_cost * f)
                    for n in inst.nodes),
        links=tuple(replace(e, cost_per_rate=e.cost_per_rate * f) for e in inst.links),
    )
    a, r = wf_jsrin(inst)
    b, s = wf_jsrin(scaled)
    assert a == b
    assert s.total_cost == r.total_cost * f


def test_user_orders_all_feasible():
    inst = generate(seed=3)
    for order in ("input", "rate-ascending", "rate-descending"):
        alloc, _ = wf_jsrin(inst, user_order=order)
        assert check_allocation(inst, alloc) == []
    with pytest.raises(ValueError):
        wf_jsrin(inst, user_order="bogus")


def test_random_is_deterministic():
    inst = generate(seed=4)
    a1, r1 = r_jsrin(inst, seed=9)
    a2, r2 = r_jsrin(inst, seed=9)
    assert a1.to_dict() == a2.to_dict()
    assert r1.total_cost == r2.total_cost


def test_random_equals_wf_with_single_paths():
    cfg = GenConfig(paths=PathGenConfig(1))
    for seed in range(5):
        inst = generate(cfg, seed)
        assert r_jsrin(inst, seed=seed)[0] == wf_jsrin(inst)[0]


def test_random_costs_more_on_average():
    # small edge nodes force traffic onto links, so path choice matters
    inst = scale_capacity(generate(seed=6), cloud=5, link=5, node=0.3)
    _, wf = wf_jsrin(inst)
    costs = []
    for s in range(100):
        alloc, rep = r_jsrin(inst, seed=s)
        assert rep.accepted == wf.accepted
        costs.append(rep.total_cost)
    mean = sum(costs) / len(costs)
    assert mean >= wf.total_cost - 1e-9
    assert max(costs) > wf.total_cost + 1.0


@pytest.mark.parametrize("seed", range(3))
def test_wf_below_exact_on_small_instances(seed):
    inst = oracle_instance(seed, n_users=3)
    alloc, wf = wf_jsrin(inst)
    _, ex = solve_exact(inst)
    assert check_allocation(inst, alloc) == []
    assert wf.objective <= ex.objective + 1e-6


def test_wf_below_exact_four_users():
    from jsrin.generate import truncate_users
    inst = truncate_users(generate(GenConfig(num_nodes=6, paths=PathGenConfig(2, 3)), 2), 4)
    alloc, wf = wf_jsrin(inst)
    _, ex = solve_exact(inst)
    assert check_allocation(inst, alloc) == []
    assert wf.objective <= ex.objective + 1e-6
