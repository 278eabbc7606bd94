"""Corrosion: environment-2 thickness loss over 18 years against the grid size.

Prints the values, relative errors against a Monte Carlo reference and the
slope of log|error| against log K; writes results/corrosion_convergence.csv.
"""
import argparse
import csv
import os

import numpy as np

from pdmpquant.config import RunConfig
from pdmpquant.evaluation import evaluate, monte_carlo, resolve_setup
from pdmpquant.quantizer import ClvqConfig, train

ap = argparse.ArgumentParser()
ap.add_argument("--grid-points", type=int, nargs="+", default=[20, 50, 100, 200, 500, 1000])
ap.add_argument("--samples-per-node", type=int, default=20)
ap.add_argument("--estimation-samples", type=int, default=1_000_000)
ap.add_argument("--n-sims", type=int, default=1_000_000)
ap.add_argument("--seed", type=int, default=4)
ap.add_argument("--out", default="results")
args = ap.parse_args()
os.makedirs(args.out, exist_ok=True)

setup = resolve_setup(RunConfig(model="corrosion"))
N = 14
mc = monte_carlo(setup, N, args.n_sims, 888)
print(f"MC reference {mc.mean:.6f} +- {mc.stderr:.1e}")

rows = []
for K in args.grid_points:
    cfg = ClvqConfig(grid_size=K, training_samples=max(args.samples_per_node * K, 10 * K),
                     estimation_samples=args.estimation_samples, seed=args.seed)
    tree = train(setup.model, setup.x0, N, cfg)
    ev = evaluate(tree, setup)
    err = (ev.value - mc.mean) / mc.mean
    rows.append([K, ev.value, err, tree.train_seconds])
    print(f"K={K:5d}  V0={ev.value:.6f}  rel.err={err:+.3%}  train {tree.train_seconds:.1f} s")

K = np.array([r[0] for r in rows], dtype=float)
e = np.abs([r[2] for r in rows])
if len(K) > 1:
    print(f"slope of log|error| vs log K: {np.polyfit(np.log(K), np.log(e), 1)[0]:.3f}")
with open(os.path.join(args.out, "corrosion_convergence.csv"), "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["K", "V0", "rel_error_vs_mc", "train_seconds"])
    w.writerows(rows)
