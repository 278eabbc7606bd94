"""Clock augmentation and deterministic-horizon functionals.

Appending the elapsed time as a coordinate turns time-dependent costs into
ordinary state costs.  A horizon ``t_f`` is then handled by cutting the
running cost at ``t_f`` and by squeezing the boundary cost between two
Lipschitz envelopes of ``1{t <= t_f}``:

    u_B(t) = 1 on [0, t_f - 1/B],  ramps to 0 at t_f          (under)
    U_B(t) = 1 on [0, t_f],        ramps to 0 at t_f + 1/B    (over)

Both envelope functionals are evaluated on the same quantization tree and
bracket the horizon functional.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .bounds import BoundInputs, epsilon_N
from .errors import ConfigError
from .functional import (CostFunctional, HorizonInfo, backward_evaluate,
                         default_smoothing)
from .pdmp import LipschitzMeta, PdmpModel, integrate_along_flow, sample_sojourns
from .streams import make_rng

UNDER, OVER = "under", "over"

ATOM_NOTE = ("the lower envelope converges as B grows only for horizons outside the atoms "
             "of the jump-time laws; atoms are not detected")


class AugmentedModel(PdmpModel):
    """``(x, t)`` with the clock ``t`` as last coordinate; the clock never jumps."""

    is_augmented = True

    def __init__(self, base: PdmpModel, model_id: Optional[str] = None):
        self.base = base
        self.model_id = model_id or f"{base.model_id}+clock"
        self.n_modes = base.n_modes
        self.dim = base.dim + 1
        self.coord_names = tuple(base.coord_names) + ("t",)
        m = base.meta
        lip_Q = None
        if m.lip_Q is not None and m.lip_tstar is not None:
            lip_Q = max(m.lip_Q, 1.0) * (1.0 + m.lip_tstar)
        self.meta = LipschitzMeta(m.C_lambda, m.lip_lambda, m.C_tstar, m.lip_tstar, lip_Q)

    def params_dict(self):
        return self.base.params_dict()

    def flow(self, mode, coords, t):
        coords = np.asarray(coords, dtype=float)
        t = np.asarray(t, dtype=float)
        x = self.base.flow(mode, coords[:, :-1], t)
        return np.column_stack([x, coords[:, -1] + t])

    def jump_rate(self, mode, coords):
        return self.base.jump_rate(mode, np.asarray(coords)[:, :-1])

    def exit_time(self, mode, coords):
        return self.base.exit_time(mode, np.asarray(coords)[:, :-1])

    def cumulative_hazard(self, mode, coords, t):
        return self.base.cumulative_hazard(mode, np.asarray(coords)[:, :-1], t)

    def hazard_inverse(self, mode, coords, e):
        return self.base.hazard_inverse(mode, np.asarray(coords)[:, :-1], e)

    def kernel(self, mode, coords, at_boundary, rng):
        coords = np.asarray(coords, dtype=float)
        m, x = self.base.kernel(mode, coords[:, :-1], at_boundary, rng)
        return m, np.column_stack([x, coords[:, -1]])

    def contains(self, mode, coords):
        coords = np.asarray(coords)
        return self.base.contains(mode, coords[:, :-1]) & (coords[:, -1] >= 0)


def augment(model: PdmpModel, model_id: Optional[str] = None) -> AugmentedModel:
    return AugmentedModel(model, model_id)


@dataclass(frozen=True)
class HorizonEnvelope:
    t_f: float
    B: float
    side: str = UNDER

    def __post_init__(self):
        if not self.B > 0:
            raise ConfigError("envelope steepness B must be positive")
        if self.t_f < 0:
            raise ConfigError("horizon t_f must be non-negative")
        if self.side not in (UNDER, OVER):
            raise ConfigError(f"envelope side must be {UNDER!r} or {OVER!r}")


def envelope_value(env: HorizonEnvelope, t):
    t = np.asarray(t, dtype=float)
    if env.side == UNDER:
        return np.clip(-env.B * (t - env.t_f), 0.0, 1.0)
    return np.where(t <= env.t_f, 1.0, np.clip(1.0 - env.B * (t - env.t_f), 0.0, 1.0))


def horizon_functional(functional: CostFunctional, t_f: float, B: Optional[float], side: str,
                       model: PdmpModel) -> CostFunctional:
    """Cut ``functional`` (defined on the clock-augmented state) at the horizon ``t_f``.

    The running cost becomes ``l 1{t <= t_f}``; the boundary cost is
    multiplied by the ``side`` envelope of steepness ``B``.
    """
    if t_f < 0:
        raise ConfigError("horizon t_f must be non-negative")
    base_l, base_L, base_c = functional.running_cost, functional.running_integral, functional.boundary_cost

    running = running_int = None
    if base_l is not None or base_L is not None:
        def cut_time(coords, t):
            return np.minimum(t, np.maximum(t_f - np.asarray(coords)[:, -1], 0.0))

        if base_l is not None:
            def running(mode, coords):
                return base_l(mode, coords) * (np.asarray(coords)[:, -1] <= t_f)

        if base_L is not None:
            def running_int(mode, coords, t):
                return base_L(mode, coords, cut_time(coords, t))
        else:
            def running_int(mode, coords, t):
                return integrate_along_flow(model, base_l, mode, coords, cut_time(coords, t))

    boundary = None
    meta = replace(functional.meta, running_indicator=True)
    if base_c is not None:
        if B is None:
            raise ConfigError("a boundary cost under a horizon needs an envelope steepness B")
        env = HorizonEnvelope(t_f, B, side)

        def boundary(mode, coords):
            return base_c(mode, coords) * envelope_value(env, np.asarray(coords)[:, -1])

        ts = model.meta.lip_tstar
        if ts is None:
            raise ConfigError("missing Lipschitz constant: lip_tstar")
        meta = replace(meta, lip_c_star=functional.meta.lip_c_star + B * functional.meta.C_c * max(1.0, ts))
    info = HorizonInfo(t_f, B if base_c is not None else None, side if base_c is not None else None,
                       functional.meta.lip_c_star)
    suffix = f"[t_f={t_f:g}" + (f",{side},B={B:g}]" if base_c is not None else "]")
    return replace(functional, running_cost=running, running_integral=running_int, boundary_cost=boundary,
                   meta=meta, name=functional.name + suffix, horizon=info)


@dataclass
class HorizonResult:
    lower: float
    upper: float
    eps_lower: Optional[float]
    eps_upper: Optional[float]
    A: Optional[float]
    B: Optional[float]
    N: int
    t_f: float
    p_TN: Optional[float] = None
    mc_reference: Optional[float] = None
    note: str = ATOM_NOTE

    @property
    def lower_bound_with_error(self):
        return None if self.eps_lower is None else self.lower - self.eps_lower

    @property
    def upper_bound_with_error(self):
        return None if self.eps_upper is None else self.upper + self.eps_upper

    def to_dict(self):
        return {
            "lower": self.lower, "upper": self.upper,
            "eps_lower": self.eps_lower, "eps_upper": self.eps_upper,
            "lower_bound_with_error": self.lower_bound_with_error,
            "upper_bound_with_error": self.upper_bound_with_error,
            "A": self.A, "B": self.B, "N": self.N, "t_f": self.t_f,
            "P(T_N<t_f)": self.p_TN, "mc_reference": self.mc_reference, "note": self.note,
        }


def default_steepness(tree):
    """Same policy as the smoothing level: ``1 / (2 max distortion)`` clamped."""
    return default_smoothing(tree)


def _safe_eps(tree, functional, model, A):
    try:
        return epsilon_N(BoundInputs.from_tree(tree, functional, model, A=A))
    except ConfigError:
        return None


def horizon_bounds(tree, functional: CostFunctional, t_f: float, model, A=None, B=None,
                   p_TN=None) -> HorizonResult:
    """Evaluate both envelope functionals on ``tree`` (trained on the augmented model)."""
    has_c = functional.boundary_cost is not None
    if has_c:
        A = A if A is not None else (functional.A if functional.A is not None else default_smoothing(tree))
        B = B if B is not None else default_steepness(tree)
    lo_f = horizon_functional(functional, t_f, B, UNDER, model).with_A(A)
    if not has_c:
        v = backward_evaluate(tree, lo_f, model, A=A).V0
        eps = _safe_eps(tree, lo_f, model, A)
        return HorizonResult(v, v, eps, eps, A, None, tree.N, t_f, p_TN)
    hi_f = horizon_functional(functional, t_f, B, OVER, model).with_A(A)
    lo = backward_evaluate(tree, lo_f, model, A=A).V0
    hi = backward_evaluate(tree, hi_f, model, A=A).V0
    return HorizonResult(lo, hi, _safe_eps(tree, lo_f, model, A), _safe_eps(tree, hi_f, model, A),
                         A, B, tree.N, t_f, p_TN)


def jump_before_horizon_probs(model, x0, t_f, n_max, n_sims, rng):
    """Empirical ``P(T_k < t_f)`` for ``k = 0..n_max``; stops early once it hits zero."""
    rng = make_rng(rng)
    probs = np.zeros(n_max + 1)
    mode = np.full(n_sims, x0.mode, dtype=np.int64)
    coords = np.tile(np.asarray(x0.coords, dtype=float), (n_sims, 1))
    times = np.zeros(n_sims)
    alive = np.flatnonzero(times < t_f)
    probs[0] = alive.size / n_sims
    for k in range(1, n_max + 1):
        if alive.size == 0:
            break
        m, c = mode[alive], coords[alive]
        s, hit = sample_sojourns(model, m, c, rng)
        m, c = model.kernel(m, model.flow(m, c, s), hit, rng)
        mode[alive], coords[alive] = m, c
        times[alive] += s
        alive = alive[times[alive] < t_f]
        probs[k] = alive.size / n_sims
    return probs


def estimate_N(model, x0, t_f, target_prob=1e-3, n_sims=100_000, rng=None, max_N=200):
    """Smallest ``N`` with empirical ``P(T_N < t_f) <= target_prob``.

    Warns and returns ``max_N`` when the target is not reached.
    """
    if not 0 < target_prob < 1:
        raise ConfigError("target_prob must lie in (0, 1)")
    probs = jump_before_horizon_probs(model, x0, t_f, max_N, n_sims, rng)
    ok = np.flatnonzero(probs <= target_prob)
    if ok.size == 0:
        warnings.warn(f"P(T_N < t_f) still {probs[-1]:.3g} > {target_prob:g} at N = {max_N}")
        return max_N
    return int(ok[0])
