"""One-mode toy model with every characteristic in closed form.

The coordinate ``zeta`` moves at constant speed toward the level
``speed * exit_time``; jumps happen at constant rate or when the level is
reached, and always reset ``zeta`` to ``reset``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigError
from ..functional import CostFunctional, CostMeta
from ..pdmp import LipschitzMeta, PdmpModel


@dataclass(frozen=True)
class ToyConstantParams:
    rate: float = 1.0
    speed: float = 1.0
    exit_time: float = 1.0
    reset: float = 0.0

    def __post_init__(self):
        if self.rate < 0:
            raise ConfigError("rate must be non-negative")
        if not self.exit_time > 0 or not self.speed > 0:
            raise ConfigError("exit_time and speed must be positive")
        if not 0 <= self.reset < self.speed * self.exit_time:
            raise ConfigError("reset point must lie inside the domain")


class ToyConstantModel(PdmpModel):
    n_modes = 1
    dim = 1
    coord_names = ("zeta",)

    def __init__(self, params: ToyConstantParams = ToyConstantParams(), model_id="toy-constant-base"):
        self.params = params
        self.model_id = model_id
        self.meta = LipschitzMeta(C_lambda=params.rate, lip_lambda=0.0, C_tstar=params.exit_time,
                                  lip_tstar=1.0 / params.speed, lip_Q=0.0)

    def params_dict(self):
        return asdict(self.params)

    def flow(self, mode, coords, t):
        return np.asarray(coords, dtype=float) + self.params.speed * np.asarray(t, dtype=float)[:, None]

    def jump_rate(self, mode, coords):
        return np.full(len(mode), self.params.rate)

    def exit_time(self, mode, coords):
        p = self.params
        return np.maximum(p.exit_time - np.asarray(coords)[:, 0] / p.speed, 0.0)

    def cumulative_hazard(self, mode, coords, t):
        return self.params.rate * np.asarray(t, dtype=float)

    def hazard_inverse(self, mode, coords, e):
        if self.params.rate == 0:
            return np.full(len(e), np.inf)
        return np.asarray(e) / self.params.rate

    def kernel(self, mode, coords, at_boundary, rng):
        return np.asarray(mode).copy(), np.full((len(mode), 1), self.params.reset)

    def contains(self, mode, coords):
        c = np.asarray(coords)[:, 0]
        return (c >= 0) & (c < self.params.speed * self.params.exit_time)


def toy_constant_model(params: ToyConstantParams = ToyConstantParams()):
    return ToyConstantModel(params)


def time_functional():
    """``l = 1``, ``c = 0``: the functional is ``E[T_N]``."""
    return CostFunctional(
        running_cost=lambda m, c: np.ones(len(m)),
        running_integral=lambda m, c, t: np.asarray(t, dtype=float).copy(),
        meta=CostMeta(C_l=1.0),
        name="time",
    )


def discounted_functional(discount=0.5, boundary=2.0, A=None):
    """On the clock-augmented toy: ``l = e^{-r t}``, ``c = boundary * e^{-r t}``."""
    r = discount

    def l(m, c):
        return np.exp(-r * np.asarray(c)[:, -1])

    def L(m, c, u):
        t0 = np.asarray(c)[:, -1]
        u = np.asarray(u, dtype=float)
        if r == 0:
            return u.copy()
        return np.exp(-r * t0) * (-np.expm1(-r * u)) / r

    def cb(m, c):
        return boundary * np.exp(-r * np.asarray(c)[:, -1])

    meta = CostMeta(C_l=1.0, lip_l1=r, lip_l2=r, C_c=abs(boundary), lip_c_star=abs(boundary) * r)
    return CostFunctional(l, cb if boundary else None, L, meta, A=A, name="discounted")
