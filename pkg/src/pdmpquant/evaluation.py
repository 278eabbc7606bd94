"""High-level workflow shared by the CLI and the experiment scripts."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bounds import BoundInputs, epsilon_N
from .config import RunConfig
from .errors import ConfigError, ModelMismatchError
from .functional import backward_evaluate, default_smoothing
from .horizon import (horizon_bounds, horizon_functional, jump_before_horizon_probs, estimate_N, UNDER)
from .models import ModelEntry, get_entry
from .montecarlo import mc_functional, mc_horizon_functional
from .pdmp import State
from .quantizer import ClvqConfig, train
from .streams import make_rng

DEFAULT_TARGET_PROB = 1e-3


@dataclass
class Setup:
    entry: ModelEntry
    params: object
    model: object
    x0: State
    t_f: Optional[float]


def resolve_setup(cfg: RunConfig) -> Setup:
    entry = get_entry(cfg.model)
    overrides = dict(cfg.params)
    if cfg.horizon is not None:
        if entry.horizon is None:
            raise ConfigError(f"model {entry.id} has no horizon parameter")
        overrides["horizon"] = cfg.horizon * entry.units_per_year
    params = entry.make_params(overrides)
    model = entry.model(params)
    if cfg.x0 is not None:
        mode, *coords = cfg.x0
        x0 = State(int(mode), coords)
        if len(x0.coords) != model.dim:
            raise ConfigError(f"x0 needs a mode and {model.dim} coordinates")
    else:
        x0 = entry.x0(params)
    t_f = entry.horizon(params) if entry.horizon is not None else None
    return Setup(entry, params, model, x0, t_f)


def resolve_N(setup: Setup, cfg: RunConfig):
    """Number of jumps and, under a horizon, the estimated ``P(T_N < t_f)``."""
    if cfg.jumps is not None:
        N = cfg.jumps
    elif setup.t_f is not None:
        target = cfg.target_prob if cfg.target_prob is not None else DEFAULT_TARGET_PROB
        N = estimate_N(setup.model, setup.x0, setup.t_f, target, cfg.n_sims_N, make_rng([cfg.seed, 1]))
    else:
        N = setup.entry.default_jumps
    p = None
    if setup.t_f is not None:
        p = float(jump_before_horizon_probs(setup.model, setup.x0, setup.t_f, N, cfg.n_sims_N,
                                            make_rng([cfg.seed, 2]))[N])
    return N, p


def quantize(setup: Setup, cfg: RunConfig, N: int):
    c = ClvqConfig(grid_size=cfg.grid_points, training_samples=cfg.training_samples,
                   estimation_samples=cfg.estimation_samples, rate_a=cfg.rate_a, rate_b=cfg.rate_b,
                   p=cfg.norm_p, seed=cfg.seed)
    return train(setup.model, setup.x0, N, c)


def check_tree(tree, setup: Setup):
    if tree.model_id != setup.model.model_id:
        raise ModelMismatchError(f"grid was built for {tree.model_id!r}, not {setup.model.model_id!r}")
    if tree.model_params != _plain(setup.model.params_dict()):
        raise ModelMismatchError("grid was built with different model parameters")
    if tree.x0 != setup.x0:
        raise ModelMismatchError(f"grid starts at {tree.x0}, configuration at {setup.x0}")


def _plain(d):
    if isinstance(d, dict):
        return {k: _plain(v) for k, v in d.items()}
    if isinstance(d, (list, tuple)):
        return [_plain(v) for v in d]
    return d


def _value(entry, fentry, value):
    if value is not None and fentry.param is None:
        raise ConfigError(f"functional {fentry.name} takes no parameter")
    return fentry.default_value if value is None else value


@dataclass
class Evaluation:
    value: float
    lower: float
    upper: float
    eps_lower: Optional[float]
    eps_upper: Optional[float]
    A: Optional[float]
    B: Optional[float]
    N: int
    table: object = None

    def to_dict(self):
        return {"value": self.value, "lower": self.lower, "upper": self.upper, "eps_lower": self.eps_lower,
                "eps_upper": self.eps_upper, "A": self.A, "B": self.B, "N": self.N}


def _eps(tree, functional, model, A):
    try:
        return epsilon_N(BoundInputs.from_tree(tree, functional, model, A=A))
    except ConfigError:
        return None


def evaluate(tree, setup: Setup, functional_name=None, value=None, A=None, B=None) -> Evaluation:
    fentry = setup.entry.functional(functional_name)
    f = fentry.build(setup.params, _value(setup.entry, fentry, value))
    if setup.t_f is not None:
        r = horizon_bounds(tree, f, setup.t_f, setup.model, A=A, B=B)
        return Evaluation(0.5 * (r.lower + r.upper), r.lower, r.upper, r.eps_lower, r.eps_upper, r.A, r.B, r.N)
    if A is None and f.boundary_cost is not None:
        A = f.A if f.A is not None else default_smoothing(tree)
    f = f.with_A(A)
    table = backward_evaluate(tree, f, setup.model, A=A)
    eps = _eps(tree, f, setup.model, A)
    return Evaluation(table.V0, table.V0, table.V0, eps, eps, A, None, tree.N, table)


def sweep(tree, setup: Setup, values, functional_name=None, A=None, B=None):
    """Evaluate a one-parameter family on one tree; returns ``[(x, value, eps)]``.

    Families declaring a linear basis are evaluated once per basis element
    and recombined.
    """
    fentry = setup.entry.functional(functional_name)
    if fentry.param is None:
        raise ConfigError(f"functional {fentry.name} has no sweep parameter")
    if fentry.basis is None:
        out = []
        for x in values:
            ev = evaluate(tree, setup, fentry.name, x, A, B)
            out.append((x, ev.value, ev.eps_upper))
        return out
    basis, coef = fentry.basis(setup.params)
    if any(b.boundary_cost is not None for b in basis):
        raise ConfigError("linear sweeps support running costs only")
    if setup.t_f is not None:
        basis = [horizon_functional(b, setup.t_f, None, UNDER, setup.model) for b in basis]
    vb = np.array([backward_evaluate(tree, b, setup.model).V0 for b in basis])
    out = []
    for x in values:
        f = fentry.build(setup.params, x)
        if setup.t_f is not None:
            f = horizon_functional(f, setup.t_f, None, UNDER, setup.model)
        out.append((x, float(np.dot(coef(x), vb)), _eps(tree, f, setup.model, None)))
    return out


def sweep_values(start, stop, step):
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def monte_carlo(setup: Setup, N: int, n_sims: int, seed, functional_name=None, value=None, A=None):
    fentry = setup.entry.functional(functional_name)
    f = fentry.build(setup.params, _value(setup.entry, fentry, value))
    if setup.t_f is not None:
        return mc_horizon_functional(setup.model, setup.x0, f, setup.t_f, N, seed, n_sims)
    return mc_functional(setup.model, setup.x0, f, N, seed, n_sims, A=A)


def bound_inputs(tree, setup: Setup, functional_name=None, value=None, A=None, B=None, side=UNDER):
    fentry = setup.entry.functional(functional_name)
    f = fentry.build(setup.params, _value(setup.entry, fentry, value))
    if f.boundary_cost is not None:
        A = A if A is not None else (f.A if f.A is not None else default_smoothing(tree))
    if setup.t_f is not None:
        if f.boundary_cost is not None and B is None:
            B = default_smoothing(tree)
        f = horizon_functional(f, setup.t_f, B, side, setup.model)
    return BoundInputs.from_tree(tree, f.with_A(A), setup.model, A=A)
