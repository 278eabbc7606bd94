"""Corrosion of a structure cycling through three environments.

Modes (0-based) are the environments.  Coordinates are the thickness loss
``d`` (mm), the time ``s`` since the last change of environment (hours) and
the corrosion rate ``rho`` (mm/h).  In environment ``m`` the loss grows as
``d_m(rho, s) = rho (s + eta_m (exp(-s / (2 eta_m)) - 1))``; environments
change at constant rates, in the order 0 -> 1 -> 2 -> 0, and each change
draws a fresh corrosion rate uniformly on the new environment's interval.
No boundary is ever reached.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError
from ..functional import CostFunctional, CostMeta
from ..pdmp import UNBOUNDED, LipschitzMeta, PdmpModel

HOURS_PER_YEAR = 8760.0


@dataclass(frozen=True)
class CorrosionParams:
    rates: tuple = (1 / 17520, 1 / 131400, 1 / 8760)
    eta: tuple = (30000.0, 200000.0, 40000.0)
    rho_min: tuple = (1e-6, 1e-7, 1e-6)
    rho_max: tuple = (1e-5, 1e-6, 1e-5)
    horizon: float = 18 * HOURS_PER_YEAR
    rho0: float = 5.5e-6

    def __post_init__(self):
        for name in ("rates", "eta", "rho_min", "rho_max"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
            if len(getattr(self, name)) != 3:
                raise ConfigError(f"{name} needs one entry per environment")
        if min(self.rates) <= 0 or min(self.eta) <= 0:
            raise ConfigError("rates and eta must be positive")
        if any(lo >= hi or lo < 0 for lo, hi in zip(self.rho_min, self.rho_max)):
            raise ConfigError("need 0 <= rho_min < rho_max in every environment")
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive")


def thickness_loss(rho, s, eta):
    """``d_m(rho, s)``, written with expm1 to stay accurate for small ``s / eta``."""
    return rho * (s + eta * np.expm1(-s / (2 * eta)))


class CorrosionModel(PdmpModel):
    n_modes = 3
    dim = 3
    coord_names = ("d", "s", "rho")

    def __init__(self, params: CorrosionParams = CorrosionParams(), model_id="corrosion-base"):
        self.params = params
        self.model_id = model_id
        self._rates = np.array(params.rates)
        self._eta = np.array(params.eta)
        self._lo = np.array(params.rho_min)
        self._hi = np.array(params.rho_max)
        # kernel constant from the Lipschitz bound of d_m on [rho_min, rho_max] x [0, t_f]
        lip_Q = max(1.0, 2 * params.horizon)
        self.meta = LipschitzMeta(C_lambda=float(self._rates.max()), lip_lambda=0.0, C_tstar=None,
                                  lip_tstar=0.0, lip_Q=lip_Q)

    def params_dict(self):
        return asdict(self.params)

    def flow(self, mode, coords, t):
        coords = np.asarray(coords, dtype=float)
        t = np.asarray(t, dtype=float)
        eta = self._eta[np.asarray(mode)]
        d, s, rho = coords[:, 0], coords[:, 1], coords[:, 2]
        dd = thickness_loss(rho, s + t, eta) - thickness_loss(rho, s, eta)
        return np.column_stack([d + dd, s + t, rho])

    def jump_rate(self, mode, coords):
        return self._rates[np.asarray(mode)]

    def exit_time(self, mode, coords):
        return np.full(len(mode), UNBOUNDED)

    def cumulative_hazard(self, mode, coords, t):
        return self._rates[np.asarray(mode)] * np.asarray(t, dtype=float)

    def hazard_inverse(self, mode, coords, e):
        return np.asarray(e) / self._rates[np.asarray(mode)]

    def kernel(self, mode, coords, at_boundary, rng):
        new = (np.asarray(mode) + 1) % 3
        coords = np.asarray(coords, dtype=float)
        rho = rng.uniform(self._lo[new], self._hi[new])
        return new.astype(np.int64), np.column_stack([coords[:, 0], np.zeros(len(new)), rho])

    def contains(self, mode, coords):
        coords = np.asarray(coords)
        m = np.asarray(mode)
        return (coords[:, 0] >= 0) & (coords[:, 1] >= 0) & (coords[:, 2] >= self._lo[m]) & (coords[:, 2] <= self._hi[m])


def corrosion_model(params: CorrosionParams = CorrosionParams()):
    return CorrosionModel(params)


def env_loss_functional(params: CorrosionParams, env: int = 1):
    """Thickness lost while in environment ``env`` (0-based; default the second one).

    Running cost ``rho (1 - exp(-s / (2 eta)) / 2)`` in that environment,
    i.e. the rate of thickness loss, whose integral is a difference of
    ``d_m`` values.
    """
    eta = params.eta[env]

    def l(m, c):
        c = np.asarray(c)
        return np.where(np.asarray(m) == env, c[:, 2] * (1 - 0.5 * np.exp(-c[:, 1] / (2 * eta))), 0.0)

    def L(m, c, u):
        c = np.asarray(c)
        s, rho = c[:, 1], c[:, 2]
        u = np.asarray(u, dtype=float)
        return np.where(np.asarray(m) == env,
                        thickness_loss(rho, s + u, eta) - thickness_loss(rho, s, eta), 0.0)

    rho_max = params.rho_max[env]
    meta = CostMeta(C_l=rho_max, lip_l1=1.0, lip_l2=rho_max / (4 * eta))
    return CostFunctional(l, None, L, meta, name=f"env{env + 1}-loss")
