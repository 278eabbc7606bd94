"""Cost functionals and the quantized backward recursion.

A functional is a running cost ``l`` integrated along the flow plus a
boundary cost ``c`` paid at forced jumps.  The indicator of a forced jump is
replaced by the tent ``delta_A`` so that the pathwise cost

    F(x, s) = L(x, s) + c(Phi(x, t*(x))) * delta_A(t*(x), s)

is Lipschitz in both arguments.  ``backward_evaluate`` runs the recursion
``v_N = 0``, ``v_k(z) = sum_j P(z -> j) [F(z, s_j) + v_{k+1}(z_j)]`` on a
trained :class:`~pdmpquant.quantizer.QuantizationTree`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, ModelMismatchError
from .pdmp import integrate_along_flow, is_bounded

A_MIN, A_MAX = 1.0, 1e6


@dataclass(frozen=True)
class CostMeta:
    """Bounds and Lipschitz constants of ``l`` and ``c`` along the flow."""

    C_l: float = 0.0
    lip_l1: float = 0.0
    lip_l2: float = 0.0
    C_c: float = 0.0
    lip_c_star: float = 0.0
    # running cost carries a 1{clock <= t_f} factor (relaxed regularity)
    running_indicator: bool = False

    def __post_init__(self):
        for name in ("C_l", "lip_l1", "lip_l2", "C_c", "lip_c_star"):
            v = getattr(self, name)
            if v is None:
                continue
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {v}")


@dataclass(frozen=True)
class HorizonInfo:
    t_f: float
    B: Optional[float]
    side: Optional[str]
    base_c_star: float


@dataclass(frozen=True)
class CostFunctional:
    """Running cost, boundary cost and smoothing level.

    ``running_cost(mode, coords)`` and ``boundary_cost(mode, coords)`` are
    vectorised; ``boundary_cost`` is called at boundary points
    ``Phi(x, t*(x))``.  ``None`` stands for the zero function.
    ``running_integral(mode, coords, t)`` is an optional closed form of
    ``L(x, t)``; without it ``L`` is computed by quadrature.
    """

    running_cost: Optional[Callable] = None
    boundary_cost: Optional[Callable] = None
    running_integral: Optional[Callable] = None
    meta: CostMeta = field(default_factory=CostMeta)
    A: Optional[float] = None
    name: str = "functional"
    horizon: Optional[HorizonInfo] = None

    def __post_init__(self):
        if self.A is not None and not self.A > 0:
            raise ConfigError(f"smoothing level A must be positive, got {self.A}")

    @property
    def is_zero(self):
        return self.running_cost is None and self.running_integral is None and self.boundary_cost is None

    def with_A(self, A):
        return replace(self, A=A)


def delta_A(tstar, t, A):
    """Tent approximation of ``1{t = t*}`` of half-width ``1/A``; zero where ``t*`` is unbounded."""
    tstar = np.asarray(tstar, dtype=float)
    t = np.asarray(t, dtype=float)
    bounded = is_bounded(tstar)
    ts = np.where(bounded, tstar, 0.0)
    return np.where(bounded, np.maximum(0.0, 1.0 - A * np.abs(t - ts)), 0.0)


def running_integral_L(functional, model, mode, coords, t):
    """``L(x, t)``, the running cost integrated along the flow over ``[0, t]``."""
    mode = np.asarray(mode)
    t = np.broadcast_to(np.asarray(t, dtype=float), mode.shape)
    if functional.running_integral is not None:
        return np.asarray(functional.running_integral(mode, coords, t), dtype=float)
    if functional.running_cost is None:
        return np.zeros(mode.shape)
    return integrate_along_flow(model, functional.running_cost, mode, coords, t)


def boundary_term(functional, model, mode, coords, tstar=None):
    """``c(Phi(x, t*(x)))``, zero where ``t*`` is unbounded or ``c`` is absent."""
    mode = np.asarray(mode)
    out = np.zeros(mode.shape)
    if functional.boundary_cost is None:
        return out
    if tstar is None:
        tstar = model.exit_time(mode, coords)
    b = np.flatnonzero(is_bounded(tstar))
    if b.size:
        bpt = model.flow(mode[b], coords[b], tstar[b])
        out[b] = functional.boundary_cost(mode[b], bpt)
    return out


def pathwise_F(functional, model, mode, coords, s, A=None, tstar=None):
    """``F(x, s) = L(x, s) + c(Phi(x, t*(x))) delta_A(x, s)``."""
    mode = np.asarray(mode)
    coords = np.asarray(coords, dtype=float).reshape(len(mode), -1)
    A = functional.A if A is None else A
    out = running_integral_L(functional, model, mode, coords, s)
    if functional.boundary_cost is not None:
        if A is None:
            raise ConfigError("a boundary cost needs a smoothing level A")
        if tstar is None:
            tstar = model.exit_time(mode, coords)
        out = out + boundary_term(functional, model, mode, coords, tstar) * delta_A(tstar, s, A)
    return out


def smoothing_gap_bound(functional, model_meta, N):
    """Bound ``N C_c C_lambda / A`` on the effect of smoothing the boundary indicator."""
    C_c = functional.meta.C_c
    if C_c == 0 or N == 0:
        return 0.0
    if functional.A is None:
        raise ConfigError("smoothing level A is not set")
    if model_meta.C_lambda is None:
        raise ConfigError("missing Lipschitz constant: C_lambda")
    return N * C_c * model_meta.C_lambda / functional.A


def default_smoothing(tree):
    """``1 / (2 max_k distortion_k)`` clamped to ``[1, 1e6]``."""
    dmax = float(np.max(tree.distortion)) if len(tree.distortion) else 0.0
    if dmax <= 0:
        return A_MAX
    return float(np.clip(1.0 / (2.0 * dmax), A_MIN, A_MAX))


@dataclass
class ValueTable:
    """Node values ``v_k`` for ``k = 0..N`` and the estimate ``V_0``."""

    values: list
    V0: float
    N: int
    A: Optional[float]
    model_id: str
    functional_name: str

    def to_dict(self):
        return {
            "model_id": self.model_id,
            "functional": self.functional_name,
            "N": self.N,
            "A": self.A,
            "V0": self.V0,
            "values": [v.tolist() for v in self.values],
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def backward_evaluate(tree, functional, model, A=None) -> ValueTable:
    """Run the quantized backward recursion and return the value table.

    ``A`` overrides ``functional.A``; when both are unset and the functional
    has a boundary cost the default policy of :func:`default_smoothing`
    applies.
    """
    if tree.model_id != model.model_id:
        raise ModelMismatchError(f"grid built for {tree.model_id!r}, model is {model.model_id!r}")
    if A is None:
        A = functional.A
    if A is None and functional.boundary_cost is not None:
        A = default_smoothing(tree)
    N = tree.N
    values = [np.zeros(len(cb.weights)) for cb in tree.codebooks]
    for k in range(N - 1, -1, -1):
        cb, nxt = tree.codebooks[k], tree.codebooks[k + 1]
        rows, cols, probs = tree.transition_pairs(k + 1)
        tstar = tree.exit_times(model, k)
        s = nxt.sojourns[cols]
        ts = tstar[rows]
        bounded = is_bounded(ts)
        s = np.where(bounded, np.minimum(s, np.where(bounded, ts, 0.0)), s)
        F = pathwise_F(functional, model, cb.modes[rows], cb.coords[rows], s, A=A, tstar=ts)
        node_val = np.bincount(rows, probs * (F + values[k + 1][cols]), minlength=len(cb.weights))
        gid, gw = tree.z_groups(k)
        if gw is not None:
            num = np.bincount(gid, cb.weights * node_val)
            den = np.bincount(gid, cb.weights)
            node_val = np.divide(num, den, out=np.zeros_like(num), where=den > 0)[gid]
        values[k] = node_val
    return ValueTable(values, float(values[0][0]), N, A, model.model_id, functional.name)
