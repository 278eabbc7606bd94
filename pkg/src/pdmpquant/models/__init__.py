"""Model registry.

Every registered model is the clock-augmented version of a base model, so
time-dependent costs and horizons are available uniformly.  Times are in
the model's own unit (days for the repair workshop, hours for corrosion);
``units_per_year`` converts horizons given in years.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Callable, Optional

import numpy as np

from ..errors import ConfigError
from ..horizon import augment
from ..pdmp import State
from .corrosion import CorrosionParams, corrosion_model, env_loss_functional
from .repair import RepairWorkshopParams, benefit_functional, benefit_rates, rate_functional, repair_workshop_model
from .toy import ToyConstantParams, discounted_functional, time_functional, toy_constant_model


@dataclass(frozen=True)
class FunctionalEntry:
    """A functional, possibly a family indexed by one scalar parameter.

    ``build(params, value)`` returns the cost on the augmented state.  A
    family that is linear in its parameter's coefficients may expose
    ``basis(params) -> (functionals, coef)``; then
    ``value(x) = sum_i coef(x)[i] * value(basis_i)`` exactly.
    """

    name: str
    build: Callable
    param: Optional[str] = None
    default_value: Optional[float] = None
    sweep_range: Optional[tuple] = None
    basis: Optional[Callable] = None


@dataclass(frozen=True)
class ModelEntry:
    id: str
    params_cls: type
    base: Callable
    x0: Callable
    units_per_year: float
    default_jumps: int
    functionals: dict = field(default_factory=dict)
    default_functional: Optional[str] = None
    horizon: Optional[Callable] = None

    def make_params(self, overrides=None):
        overrides = dict(overrides or {})
        names = {f.name for f in fields(self.params_cls)}
        unknown = set(overrides) - names
        if unknown:
            raise ConfigError(f"unknown parameter(s) for {self.id}: {sorted(unknown)}")
        return replace(self.params_cls(), **overrides)

    def model(self, params=None):
        params = self.params_cls() if params is None else params
        return augment(self.base(params), self.id)

    def functional(self, name=None):
        name = name or self.default_functional
        try:
            return self.functionals[name]
        except KeyError:
            raise ConfigError(f"model {self.id} has no functional {name!r}; "
                              f"choose from {sorted(self.functionals)}") from None


def _repair_basis(p):
    basis = [rate_functional(p, np.eye(3)[i], name=f"mode{i}-rate") for i in range(3)]
    return basis, lambda x: benefit_rates(p, x)


def _toy_x0(p):
    return State(0, (0.0, 0.0))


REGISTRY = {
    "repair-workshop": ModelEntry(
        id="repair-workshop",
        params_cls=RepairWorkshopParams,
        base=repair_workshop_model,
        x0=lambda p: State(0, (0.0, 0.0)),
        units_per_year=365.0,
        default_jumps=18,
        functionals={
            "benefit": FunctionalEntry("benefit", lambda p, x: benefit_functional(p, 0.78 if x is None else x),
                                       param="x", default_value=0.78, sweep_range=(0.0, 1.0, 0.01),
                                       basis=_repair_basis),
        },
        default_functional="benefit",
        horizon=lambda p: p.horizon,
    ),
    "corrosion": ModelEntry(
        id="corrosion",
        params_cls=CorrosionParams,
        base=corrosion_model,
        x0=lambda p: State(0, (0.0, 0.0, p.rho0, 0.0)),
        units_per_year=8760.0,
        default_jumps=14,
        functionals={"env2-loss": FunctionalEntry("env2-loss", lambda p, x: env_loss_functional(p, 1))},
        default_functional="env2-loss",
        horizon=lambda p: p.horizon,
    ),
    "toy-constant": ModelEntry(
        id="toy-constant",
        params_cls=ToyConstantParams,
        base=toy_constant_model,
        x0=_toy_x0,
        units_per_year=1.0,
        default_jumps=2,
        functionals={
            "time": FunctionalEntry("time", lambda p, x: time_functional()),
            "discounted": FunctionalEntry("discounted",
                                          lambda p, x: discounted_functional(boundary=2.0 if x is None else x),
                                          param="boundary", default_value=2.0, sweep_range=(0.0, 4.0, 0.5)),
        },
        default_functional="discounted",
    ),
}


def get_entry(model_id: str) -> ModelEntry:
    try:
        return REGISTRY[model_id]
    except KeyError:
        raise ConfigError(f"unknown model {model_id!r}; choose from {sorted(REGISTRY)}") from None


__all__ = [
    "REGISTRY", "ModelEntry", "FunctionalEntry", "get_entry",
    "RepairWorkshopParams", "CorrosionParams", "ToyConstantParams",
    "repair_workshop_model", "corrosion_model", "toy_constant_model",
    "benefit_functional", "env_loss_functional", "time_functional", "discounted_functional",
]
