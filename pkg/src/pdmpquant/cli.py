"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 model/grid mismatch,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np

from .bounds import epsilon_breakdown
from .config import RunConfig, dump_config, load_config
from .errors import ConfigError, DomainError, ModelMismatchError, NumericError, QuantizationError
from .evaluation import (bound_inputs, check_tree, evaluate, monte_carlo, quantize, resolve_N, resolve_setup,
                         sweep, sweep_values)
from .gridio import load_tree, save_tree
from .horizon import estimate_N, jump_before_horizon_probs

EXIT_OK, EXIT_CONFIG, EXIT_MISMATCH, EXIT_NUMERIC = 0, 2, 3, 4

# command-line flag -> RunConfig field
FLAGS = {
    "model": "model", "functional": "functional", "grid_points": "grid_points", "samples": "samples",
    "estimation_samples": "estimation_samples", "jumps": "jumps", "horizon": "horizon",
    "target_prob": "target_prob", "A": "A", "B": "B", "norm_p": "norm_p", "seed": "seed",
    "n_sims": "n_sims", "value": "value", "param": "param", "grid": "grid", "out": "out",
}


def _common(p):
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--model", help="registered model id")
    p.add_argument("--functional", help="functional name (model default if omitted)")
    p.add_argument("--grid", help="grid file to read")
    p.add_argument("--grid-points", dest="grid_points", type=int, help="nodes per step K")
    p.add_argument("--samples", type=int, help="CLVQ training samples (default 20 K)")
    p.add_argument("--estimation-samples", dest="estimation_samples", type=int,
                   help="paths for weights and transitions (default: max(training samples, 100000))")
    p.add_argument("--jumps", type=int, help="number of jumps N")
    p.add_argument("--horizon", type=float, help="horizon t_f in years")
    p.add_argument("--target-prob", dest="target_prob", type=float, help="target P(T_N < t_f) for deriving N")
    p.add_argument("--A", type=float, help="smoothing level of the boundary indicator")
    p.add_argument("--B", type=float, help="steepness of the horizon envelopes")
    p.add_argument("--norm-p", dest="norm_p", type=float, help="norm order p")
    p.add_argument("--seed", type=int, help="64-bit seed")
    p.add_argument("--n-sims", dest="n_sims", type=int, help="Monte Carlo simulations")
    p.add_argument("--value", type=float, help="value of the functional's parameter")
    p.add_argument("--param", help="sweep parameter name")
    p.add_argument("--out", help="output path")


def build_parser():
    ap = argparse.ArgumentParser(prog="pdmpquant", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("quantize", "train quantization grids and write a grid file"),
        ("evaluate", "evaluate a functional on a grid file"),
        ("sweep", "evaluate a one-parameter family on one grid file, CSV output"),
        ("mc", "Monte Carlo reference"),
        ("bound", "a-priori error bound breakdown"),
        ("estimate-n", "smallest N with P(T_N < t_f) below the target"),
        ("show-config", "print the effective configuration"),
    ]:
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "sweep":
            p.add_argument("--range", nargs=3, type=float, metavar=("START", "STOP", "STEP"))
        if name == "evaluate":
            p.add_argument("--values", action="store_true", help="print per-step node values")
        if name == "bound":
            p.add_argument("--csv", action="store_true", help="CSV instead of a text table")
    return ap


def make_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {field: getattr(args, flag) for flag, field in FLAGS.items() if getattr(args, flag, None) is not None}
    if getattr(args, "range", None) is not None:
        over["range"] = list(args.range)
    # a flag for one way of fixing N overrides the other given in the file
    if "jumps" in over:
        cfg.target_prob = None
    if "target_prob" in over:
        cfg.jumps = None
    return cfg.merged(**over)


def _need_grid(cfg):
    if not cfg.grid:
        raise ConfigError("--grid is required")
    return load_tree(cfg.grid)


def cmd_quantize(cfg, out):
    setup = resolve_setup(cfg)
    N, p = resolve_N(setup, cfg)
    t0 = time.perf_counter()
    tree = quantize(setup, cfg, N)
    secs = time.perf_counter() - t0
    path = cfg.out or cfg.grid
    if not path:
        raise ConfigError("--out is required")
    save_tree(tree, path)
    print(f"model {tree.model_id}  N={N}  K={cfg.grid_points}  seed={cfg.seed}", file=out)
    if p is not None:
        print(f"P(T_N < t_f) ~ {p:.3g}", file=out)
    for k, (d, dz, ds) in enumerate(zip(tree.distortion, tree.distortion_Z, tree.distortion_S)):
        print(f"step {k:3d}  nodes {len(tree.codebooks[k]):6d}  distortion {d:.6g}  (Z {dz:.6g}, S {ds:.6g})",
              file=out)
    print(f"wrote {path} in {secs:.2f} s", file=out)


def cmd_evaluate(cfg, out, show_values=False):
    tree = _need_grid(cfg)
    setup = resolve_setup(cfg)
    check_tree(tree, setup)
    t0 = time.perf_counter()
    ev = evaluate(tree, setup, cfg.functional, cfg.value, cfg.A, cfg.B)
    secs = time.perf_counter() - t0
    if ev.lower == ev.upper:
        print(f"V0 = {ev.value:.10g}", file=out)
    else:
        print(f"V0 in [{ev.lower:.10g}, {ev.upper:.10g}]", file=out)
    eps = ev.eps_upper if ev.eps_upper is not None else ev.eps_lower
    print("a-priori bound eps_N = " + ("unavailable (missing metadata)" if eps is None else f"{eps:.6g}"), file=out)
    print(f"N={ev.N}  A={ev.A}  B={ev.B}  seed={tree.seed}  time {secs:.3f} s", file=out)
    if show_values and ev.table is not None:
        for k, v in enumerate(ev.table.values):
            print(f"v[{k}] = " + np.array2string(v, precision=6, threshold=20), file=out)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            json.dump(ev.to_dict() | {"seed": tree.seed}, fh, indent=1)


def cmd_sweep(cfg, out):
    tree = _need_grid(cfg)
    setup = resolve_setup(cfg)
    check_tree(tree, setup)
    fentry = setup.entry.functional(cfg.functional)
    if cfg.param is not None and cfg.param != fentry.param:
        raise ConfigError(f"functional {fentry.name} is parameterised by {fentry.param!r}, not {cfg.param!r}")
    rng = cfg.range or fentry.sweep_range
    if rng is None:
        raise ConfigError("--range is required")
    rows = sweep(tree, setup, sweep_values(*rng), cfg.functional, cfg.A, cfg.B)
    fh = open(cfg.out, "w", newline="", encoding="utf-8") if cfg.out else out
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["parameter", "value", "epsilon", "seed"])
        for x, v, e in rows:
            w.writerow([repr(x), repr(v), "" if e is None else repr(e), tree.seed])
    finally:
        if cfg.out:
            fh.close()
    best = max(rows, key=lambda r: r[1])
    print(f"argmax {fentry.param} = {best[0]:g}  value = {best[1]:.10g}", file=out)


def cmd_mc(cfg, out):
    setup = resolve_setup(cfg)
    N, _ = resolve_N(setup, cfg)
    est = monte_carlo(setup, N, cfg.n_sims, cfg.seed, cfg.functional, cfg.value, cfg.A)
    print(f"mean {est.mean:.10g}  stderr {est.stderr:.3g}  n_sims {est.n_sims}  seed {cfg.seed}  "
          f"N {N}  time {est.seconds:.2f} s", file=out)


def cmd_bound(cfg, out, as_csv=False):
    tree = _need_grid(cfg)
    setup = resolve_setup(cfg)
    check_tree(tree, setup)
    bd = epsilon_breakdown(bound_inputs(tree, setup, cfg.functional, cfg.value, cfg.A, cfg.B))
    text = bd.to_csv() if as_csv else bd.to_text()
    print(text, file=out)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(bd.to_csv())


def cmd_estimate_n(cfg, out):
    setup = resolve_setup(cfg)
    if setup.t_f is None:
        raise ConfigError(f"model {setup.entry.id} has no horizon")
    target = cfg.target_prob if cfg.target_prob is not None else 1e-3
    N = estimate_N(setup.model, setup.x0, setup.t_f, target, cfg.n_sims_N, [cfg.seed, 1])
    p = jump_before_horizon_probs(setup.model, setup.x0, setup.t_f, N, cfg.n_sims_N, [cfg.seed, 2])[N]
    print(f"N = {N}  (P(T_N < t_f) ~ {p:.3g}, target {target:g}, {cfg.n_sims_N} paths, seed {cfg.seed})", file=out)


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
        if args.command == "quantize":
            cmd_quantize(cfg, out)
        elif args.command == "evaluate":
            cmd_evaluate(cfg, out, args.values)
        elif args.command == "sweep":
            cmd_sweep(cfg, out)
        elif args.command == "mc":
            cmd_mc(cfg, out)
        elif args.command == "bound":
            cmd_bound(cfg, out, args.csv)
        elif args.command == "estimate-n":
            cmd_estimate_n(cfg, out)
        elif args.command == "show-config":
            print(dump_config(cfg), file=out, end="")
    except ModelMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (NumericError, QuantizationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
