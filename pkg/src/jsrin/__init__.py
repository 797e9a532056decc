"""Joint network slicing, routing and in-network computing resource allocation.

Exact MILP model (with MPS export), a desk-scale exact solver, the
water-filling heuristic WF-JSRIN, the random baseline R-JSRIN, an
independent feasibility checker and seeded instance generation.
"""
from .exact import BudgetExhausted, brute_force_oracle, solve_exact
from .generate import GenConfig, generate, scale_capacity, truncate_users
from .heuristics import compute_slice_fractions, r_jsrin, wf_jsrin
from .lp import solve_lp
from .milp import build_model, export_model, import_solution, read_mps, read_solution
from .model import (
    Allocation,
    Link,
    NetworkInstance,
    Node,
    Path,
    Slice,
    SolveReport,
    UserRequest,
    load_instance,
    save_instance,
    validate_instance,
)
from .pathgen import PathGenConfig, enumerate_paths
from .validate import check_allocation, compute_report

__version__ = "0.1.0"
