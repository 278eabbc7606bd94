"""Repair workshop: a machine that wears out, breaks down or is maintained.

Modes (0-based): 0 working, 1 under repair after a breakdown, 2 under
preventive maintenance.  The coordinate ``zeta`` is the time spent in the
current mode, in days.  A working machine breaks down with a Weibull hazard
in its age and is sent to maintenance when its age reaches one year;
repair and maintenance last a fixed time, after which the machine is as
good as new.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ConfigError
from ..functional import CostFunctional, CostMeta
from ..pdmp import LipschitzMeta, PdmpModel

WORKING, REPAIR, MAINTENANCE = 0, 1, 2


@dataclass(frozen=True)
class RepairWorkshopParams:
    weibull_shape: float = 2.0
    weibull_scale: float = 600.0
    maintenance_age: float = 365.0
    repair_duration: float = 7.0
    discount: float = 0.03 / 365
    horizon: float = 5 * 365.0
    maintenance_cost: float = 5.0
    repair_cost_factor: float = 100.0

    def __post_init__(self):
        if min(self.weibull_shape, self.weibull_scale, self.maintenance_age, self.repair_duration) <= 0:
            raise ConfigError("durations and Weibull parameters must be positive")
        if self.weibull_shape < 1:
            raise ConfigError("Weibull shape below 1 gives an unbounded hazard")
        if self.discount < 0 or self.horizon < 0:
            raise ConfigError("discount and horizon must be non-negative")


class RepairWorkshopModel(PdmpModel):
    n_modes = 3
    dim = 1
    coord_names = ("zeta",)

    def __init__(self, params: RepairWorkshopParams = RepairWorkshopParams(), model_id="repair-workshop-base"):
        self.params = params
        self.model_id = model_id
        a, b, age = params.weibull_shape, params.weibull_scale, params.maintenance_age
        C_lam = (a / b) * (age / b) ** (a - 1)
        # hazard derivative a(a-1)/b^2 (z/b)^(a-2) is largest at the maintenance age (a >= 2) or near 0
        lip_lam = a * (a - 1) / b ** 2 * (age / b) ** (a - 2) if a >= 2 else None
        self.meta = LipschitzMeta(C_lambda=C_lam, lip_lambda=lip_lam,
                                  C_tstar=max(age, params.repair_duration), lip_tstar=1.0, lip_Q=0.0)

    def params_dict(self):
        return asdict(self.params)

    def _limit(self, mode):
        p = self.params
        return np.where(np.asarray(mode) == WORKING, p.maintenance_age, p.repair_duration)

    def flow(self, mode, coords, t):
        return np.asarray(coords, dtype=float) + np.asarray(t, dtype=float)[:, None]

    def jump_rate(self, mode, coords):
        a, b = self.params.weibull_shape, self.params.weibull_scale
        z = np.asarray(coords)[:, 0]
        return np.where(np.asarray(mode) == WORKING, (a / b) * (z / b) ** (a - 1), 0.0)

    def exit_time(self, mode, coords):
        return np.maximum(self._limit(mode) - np.asarray(coords)[:, 0], 0.0)

    def cumulative_hazard(self, mode, coords, t):
        a, b = self.params.weibull_shape, self.params.weibull_scale
        z = np.asarray(coords)[:, 0]
        t = np.asarray(t, dtype=float)
        return np.where(np.asarray(mode) == WORKING, ((z + t) / b) ** a - (z / b) ** a, 0.0)

    def hazard_inverse(self, mode, coords, e):
        a, b = self.params.weibull_shape, self.params.weibull_scale
        z = np.asarray(coords)[:, 0]
        s = b * ((z / b) ** a + np.asarray(e)) ** (1.0 / a) - z
        return np.where(np.asarray(mode) == WORKING, s, np.inf)

    def kernel(self, mode, coords, at_boundary, rng):
        mode = np.asarray(mode)
        new = np.where(mode == WORKING, np.where(at_boundary, MAINTENANCE, REPAIR), WORKING)
        return new.astype(np.int64), np.zeros((len(mode), 1))

    def contains(self, mode, coords):
        z = np.asarray(coords)[:, 0]
        return (z >= 0) & (z < self._limit(mode))


def repair_workshop_model(params: RepairWorkshopParams = RepairWorkshopParams()):
    return RepairWorkshopModel(params)


def benefit_rates(params: RepairWorkshopParams, x: float):
    """Per-mode benefit rates: production ``x``, repair ``-p(x)``, maintenance ``-q``."""
    if not 0 <= x <= 1:
        raise ConfigError(f"setting x must lie in [0, 1], got {x}")
    return np.array([x, -params.repair_cost_factor * x * x, -params.maintenance_cost])


def rate_functional(params: RepairWorkshopParams, coef, name="benefit"):
    """Discounted running cost ``coef[mode] e^{-rho t}`` on the clock-augmented state."""
    coef = np.asarray(coef, dtype=float)
    r = params.discount

    def l(m, c):
        return coef[np.asarray(m)] * np.exp(-r * np.asarray(c)[:, -1])

    def L(m, c, u):
        t0 = np.asarray(c)[:, -1]
        u = np.asarray(u, dtype=float)
        if r == 0:
            return coef[np.asarray(m)] * u
        return coef[np.asarray(m)] * np.exp(-r * t0) * (-np.expm1(-r * u)) / r

    C_l = float(np.max(np.abs(coef)))
    return CostFunctional(l, None, L, CostMeta(C_l=C_l, lip_l1=r * C_l, lip_l2=r * C_l), name=name)


def benefit_functional(params: RepairWorkshopParams, x: float):
    """Discounted benefit at setting ``x`` (before the horizon cut)."""
    return rate_functional(params, benefit_rates(params, x), name=f"benefit(x={x:g})")
