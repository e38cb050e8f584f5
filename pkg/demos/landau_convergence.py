"""Self-convergence of weak Landau damping at t = 1.

Runs the refinement ladder of the published convergence table and prints
errors between successive levels together with observed orders, next to the
published values. Each regime takes about twenty seconds; ``--quick`` uses a
ladder one level coarser.

    python demos/landau_convergence.py [--quick] [--tau0 10 1000 100000]
"""

import argparse
import tempfile

from hermite_dg.config import parse_config
from hermite_dg.experiments import run_convergence_study

# (L1, L2, Linf) errors at Nx = 64 and 128 from the published table
PUBLISHED = {
    10.0: [(5.52e-3, 1.82e-3, 1.10e-3), (1.43e-3, 4.70e-4, 2.85e-4)],
    1e3: [(5.87e-3, 1.96e-3, 1.23e-3), (1.31e-3, 4.45e-4, 2.89e-4)],
    1e5: [(5.87e-3, 1.96e-3, 1.23e-3), (1.31e-3, 4.44e-4, 2.90e-4)],
}

p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
p.add_argument("--quick", action="store_true", help="use the 32/64/128 ladder")
p.add_argument("--tau0", type=float, nargs="+", default=[10.0])
p.add_argument("--output-dir", default=None)
args = p.parse_args()

if not args.quick:
    levels, dts = [[64, 64], [128, 128], [256, 256]], [0.04, 0.02, 0.01]
else:
    levels, dts = [[32, 32], [64, 64], [128, 128]], [0.08, 0.04, 0.02]

cfg = parse_config(f"""
model: {{m: 1, delta: 0.05}}
time: {{t_end: 1.0}}
convergence: {{levels: {levels}, dt: {dts}}}
""")
out = args.output_dir or tempfile.mkdtemp(prefix="landau_conv_")
reports = run_convergence_study(cfg, out_dir=out, tau0_list=args.tau0)

for r in reports:
    print(f"\ntau0 = {r.tau0:g}")
    print(f"{'Nx':>5s} {'L1':>10s} {'L2':>10s} {'Linf':>10s}   orders")
    for i, e in enumerate(r.errors):
        orders = "  ".join(f"{o:5.2f}" for o in r.orders[i - 1]) if i else ""
        print(f"{r.levels[i][0]:5d} {e[0]:10.3e} {e[1]:10.3e} {e[2]:10.3e}   {orders}")
    if not args.quick and r.tau0 in PUBLISHED:
        print("published:")
        for nx, e in zip((64, 128), PUBLISHED[r.tau0]):
            print(f"{nx:5d} {e[0]:10.3e} {e[1]:10.3e} {e[2]:10.3e}")

# The errors compare each run with the next finer one on the finer mesh, so a
# second-order scheme shows the errors dropping by about 4 per level.
print(f"\nconvergence.csv and convergence.json written to {out}")
