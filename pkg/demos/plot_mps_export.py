"""
Exporting the model for an external solver
==========================================

The model is written as fixed-format MPS; any MILP solver can read it.  If
``highspy`` is installed the file is solved here and the solution imported
back and checked.
"""

import tempfile
from pathlib import Path

from jsrin import build_model, check_allocation, export_model, generate, import_solution, read_mps, solve_exact
from jsrin.generate import truncate_users
from jsrin.milp import read_solution

inst = truncate_users(generate(seed=1), 4)
model, vmap = build_model(inst, "opt_in")
tmp = Path(tempfile.mkdtemp())
mps = export_model(model, vmap, tmp / "jsrin.mps")
print(f"{len(model.variables)} columns, {len(model.rows)} rows -> {mps}")
print("\n".join(mps.read_text().splitlines()[:12]))

###############################################################################
# Reading the file back gives the same rows.
back = read_mps(mps)
print("rows after re-parse:", len(back.rows), "tags:", sorted(back.rows_by_tag()))

###############################################################################
# Solve externally, then import the solution file.  Solvers typically accept
# row violations near 1e-7 by default, while the checker allows 1e-9 of the
# right-hand side, so the feasibility tolerances are tightened first.
try:
    import highspy
except ImportError:
    highspy = None

if highspy is not None:
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("primal_feasibility_tolerance", 1e-10)
    h.setOptionValue("mip_feasibility_tolerance", 1e-10)
    h.readModel(str(mps))
    h.run()
    h.writeSolution(str(tmp / "jsrin.sol"), 0)
    alloc = import_solution(vmap, read_solution(tmp / "jsrin.sol"))
    print("external objective:", h.getInfo().objective_function_value)
    print("internal objective:", solve_exact(inst)[1].objective)
    print("violations after import:", check_allocation(inst, alloc))
