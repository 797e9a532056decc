"""
Exact optimum against the heuristics
====================================

On small instances the exact solver, the cloud-only variant, the water
filling heuristic and the random baseline can be compared directly.
"""

from jsrin import generate, r_jsrin, solve_exact, truncate_users, wf_jsrin

print(f"{'seed':>4} {'solver':>8} {'A':>2} {'B':>9} {'bandwidth':>9}")
for seed in range(4):
    inst = truncate_users(generate(seed=seed), 4)
    runs = {
        "exact": solve_exact(inst, "opt_in"),
        "cloud": solve_exact(inst, "opt_c"),
        "wf": wf_jsrin(inst),
        "random": r_jsrin(inst, seed),
    }
    for name, (_, rep) in runs.items():
        print(f"{seed:>4} {name:>8} {rep.accepted:>2} {rep.total_cost:>9.2f} {rep.bandwidth_usage:>9.2f}")

###############################################################################
# Keeping all compute at the cloud makes every request cross its whole path,
# so cost and bandwidth go up; the heuristics sit between the two exact runs.
