"""
Parameter sweeps
================

Cost against the number of users, and acceptance against cloud capacity.
Both sweeps write a CSV and a ``.mean.csv`` with per-point means; set
``JSRIN_WORKERS`` to run cells in parallel.
"""

import tempfile
from pathlib import Path

from jsrin import bench
from jsrin.generate import GenConfig
from jsrin.pathgen import PathGenConfig

out = Path(tempfile.mkdtemp())

rows = bench.sweep_users(bench.UserSweep(users=(3, 9, 15, 30), seeds=tuple(range(5))))
path = bench.write_user_sweep(rows, out / "users.csv")
for r in bench.read_csv(path.with_suffix(".mean.csv")):
    print(f"{r['solver']:>7} users={r['users']:>2} A={float(r['A']):5.1f} B={float(r['B']):8.1f} "
          f"t={float(r['wall_clock']) * 1e3:.2f} ms")

###############################################################################
# Acceptance with little cloud capacity, on instances small enough for the
# exact solvers.
small = GenConfig(num_nodes=6, num_slices=3, users_per_slice=1, paths=PathGenConfig(2, 3))
cfg = bench.CapacitySweep(scales=(0.05, 0.1, 0.5), axis="cloud", seeds=tuple(range(10)),
                          solvers=("wf", "exact_in", "exact_c"), gen=small)
rows = bench.sweep_capacity(cfg)
for r in bench.aggregate(rows, ["solver", "scale"], ["accepted"]):
    print(f"{r['solver']:>8} scale={r['scale']:<5} accepted={r['accepted']:.2f}")
bench.write_plot_template(out / "plot.py")
print("plot helper written to", out / "plot.py")
