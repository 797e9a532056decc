"""
Water filling on a small instance
=================================

A walk through one heuristic run: slice fractions, one path attempt, and the
final allocation with its cost breakdown.
"""

from jsrin import check_allocation, compute_slice_fractions, generate, wf_jsrin
from jsrin.generate import GenConfig
from jsrin.heuristics import SliceState, attempt_path

inst = generate(GenConfig(num_nodes=8, num_slices=2, users_per_slice=3), seed=4)
print(f"{len(inst.nodes)} nodes, {len(inst.links)} links, cloud = node {inst.cloud}")

###############################################################################
# Each slice keeps its minimum fraction and shares the rest by demand.
lam = compute_slice_fractions(inst)
for m, frac in lam.items():
    demand = sum(inst.user[u].rate_requirement for u in inst.slice[m].users)
    print(f"slice {m}: demand {demand:6.2f} -> fraction {frac:.3f}")

###############################################################################
# One attempt pours the first user's rate into the nodes of each path in
# order; the state is only read, never changed.
state = SliceState.initial(inst, lam)
user = inst.users[0]
for p in inst.paths_of(user.id):
    att = attempt_path(user, p, state, inst)
    shares = {v: round(w, 2) for v, w in att.tentative_w.items()}
    print(f"path {p.nodes}: feasible={att.feasible} cost={att.cost:7.2f} shares={shares}")

###############################################################################
# The full run picks the cheapest feasible attempt per user.
alloc, report = wf_jsrin(inst)
print(f"accepted {report.accepted}/{len(inst.users)}, B = {report.total_cost:.2f} "
      f"(compute {report.compute_cost:.2f}, activation {report.activation_cost:.2f}, links {report.link_cost:.2f})")
print("violations:", check_allocation(inst, alloc))
