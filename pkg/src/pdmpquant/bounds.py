"""A-priori error bound of the quantized scheme.

The bound combines the per-step distortions of the Z and S components with
Lipschitz constants of the pathwise cost ``F`` and of the value functions
``v_n`` (``n`` = number of remaining jumps), propagated by the recursion

    C_{v_n}   = n (C_t* C_l + C_c)
    [v_n]_1   = e^{C_t* C_lam} (K(A, v_{n-1}) + n C_t* [lam]_1 (C_t* C_l + C_c)) + C_t* [l]_1
    [v_n]_2   = e^{C_t* C_lam} (C_t* C_l C_lam + 2 C_l + C_lam C_c + (2n - 1) C_lam (C_t* C_l + C_c)) + C_l
    [v_n]_*   = [v_n]_1 + [t*] [v_n]_2
    [v_n]     = K(A, v_{n-1})

with ``K(A, w) = E1 + E2 A + E3 [w]_1 + E4 C_w + [Q] [w]_*``.  Two variants
are folded in:

* a running cost cut at a horizon (``running_indicator``) replaces
  ``C_t* [l]_1`` by ``C_t* [l]_1 + C_l`` everywhere;
* an envelope boundary cost of steepness ``B`` raises ``[c]_*`` by
  ``B C_c (1 v [t*])``.

For the clock-augmented process the caller supplies the augmented kernel
constant; nothing else changes.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class BoundInputs:
    N: int
    A: Optional[float]
    C_l: float
    lip_l1: float
    lip_l2: float
    C_c: float
    lip_c_star: float
    C_lambda: float
    lip_lambda: float
    C_tstar: float
    lip_tstar: float
    lip_Q: float
    dist_Z: np.ndarray
    dist_S: np.ndarray
    B: Optional[float] = None
    running_indicator: bool = False
    augmented: bool = False

    def __post_init__(self):
        for f in fields(self):
            if f.name in ("A", "B", "dist_Z", "dist_S", "running_indicator", "augmented", "N"):
                continue
            v = getattr(self, f.name)
            if v is None:
                raise ConfigError(f"missing Lipschitz constant: {f.name}")
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"constant {f.name} must be finite and non-negative, got {v}")
        if self.N < 0:
            raise ConfigError("N must be non-negative")
        object.__setattr__(self, "dist_Z", np.asarray(self.dist_Z, dtype=float))
        object.__setattr__(self, "dist_S", np.asarray(self.dist_S, dtype=float))
        if len(self.dist_Z) != self.N + 1 or len(self.dist_S) != self.N + 1:
            raise ConfigError("distortion arrays must have length N + 1")
        if (self.dist_Z < 0).any() or (self.dist_S < 0).any():
            raise ConfigError("distortions must be non-negative")
        if self.C_c > 0 and not (self.A and self.A > 0):
            raise ConfigError("a boundary cost needs a positive smoothing level A")
        if self.B is not None and not self.B > 0:
            raise ConfigError("envelope steepness B must be positive")

    @classmethod
    def from_parts(cls, model_meta, cost_meta, *, N, A, dist_Z, dist_S, B=None, t_f=None, augmented=False):
        """Assemble inputs from model and cost metadata.

        An unbounded exit time is replaced by the horizon ``t_f``; without
        a horizon the bound is refused.
        """
        C_tstar = model_meta.C_tstar
        if C_tstar is None:
            if t_f is None or not math.isfinite(t_f):
                raise ConfigError("exit time is unbounded and no horizon t_f is given: C_tstar is undefined")
            C_tstar = t_f
        return cls(
            N=N, A=A, C_l=cost_meta.C_l, lip_l1=cost_meta.lip_l1, lip_l2=cost_meta.lip_l2,
            C_c=cost_meta.C_c, lip_c_star=cost_meta.lip_c_star,
            C_lambda=model_meta.C_lambda, lip_lambda=model_meta.lip_lambda, C_tstar=C_tstar,
            lip_tstar=model_meta.lip_tstar, lip_Q=model_meta.lip_Q,
            dist_Z=dist_Z, dist_S=dist_S, B=B, running_indicator=cost_meta.running_indicator,
            augmented=augmented,
        )

    @classmethod
    def from_tree(cls, tree, functional, model, A=None):
        """Inputs for ``functional`` evaluated on ``tree``."""
        hz = functional.horizon
        cost_meta = functional.meta
        B = t_f = None
        if hz is not None:
            t_f = hz.t_f
            B = hz.B if functional.boundary_cost is not None else None
            cost_meta = replace(cost_meta, lip_c_star=hz.base_c_star)
        A = functional.A if A is None else A
        return cls.from_parts(model.meta, cost_meta, N=tree.N, A=A, dist_Z=tree.distortion_Z,
                              dist_S=tree.distortion_S, B=B, t_f=t_f,
                              augmented=getattr(model, "is_augmented", False))

    # effective constants -------------------------------------------------
    @property
    def Ct_l1(self):
        """``C_t* [l]_1``, relaxed to ``C_t* [l]_1 + C_l`` under a horizon indicator."""
        v = self.C_tstar * self.lip_l1
        return v + self.C_l if self.running_indicator else v

    @property
    def c_star(self):
        v = self.lip_c_star
        if self.B is not None:
            v += self.B * self.C_c * max(1.0, self.lip_tstar)
        return v

    @property
    def A_eff(self):
        return 0.0 if self.A is None else self.A


def lipschitz_F(inp: BoundInputs):
    """``([F]_1, [F]_2)``."""
    F1 = inp.Ct_l1 + inp.c_star + inp.A_eff * inp.lip_tstar * inp.C_c
    F2 = inp.C_l + inp.A_eff * inp.C_c
    return F1, F2


def E_constants(inp: BoundInputs):
    Ct, Cl, Cc, Cl_ = inp.C_tstar, inp.C_l, inp.C_c, inp.C_lambda
    l1, ts, Q = inp.lip_lambda, inp.lip_tstar, inp.lip_Q
    E1 = (2 * inp.Ct_l1 + Cl * (ts + 2 * Ct ** 2 * l1) + inp.c_star * (1 + Ct * Cl_)
          + Cc * (2 * l1 * Ct + Cl_ * Ct ** 2 * l1 + 2 * ts * Cl_))
    E2 = Cc * Ct * Cl_ * ts
    E3 = (1 + Ct * Cl_) * Q
    E4 = 2 * Cl_ * ts + Ct * l1 * (2 + Ct * Cl_)
    return E1, E2, E3, E4


def K_of(inp: BoundInputs, w_lip1, C_w, w_star):
    """``K(A, w)`` for a function ``w`` with constants ``[w]_1``, ``C_w``, ``[w]_*``."""
    E1, E2, E3, E4 = E_constants(inp)
    return E1 + E2 * inp.A_eff + E3 * w_lip1 + E4 * C_w + inp.lip_Q * w_star


@dataclass
class BoundBreakdown:
    """Constants indexed by the number of remaining jumps ``n = 0..N``, and the total."""

    inputs: BoundInputs
    F1: float
    F2: float
    E: tuple
    C_v: np.ndarray
    v_lip1: np.ndarray
    v_lip2: np.ndarray
    v_star: np.ndarray
    v_lip: np.ndarray
    step_terms: np.ndarray = field(default=None)
    smoothing: float = 0.0
    total: float = 0.0

    def rows(self):
        out = [("F1", "", self.F1), ("F2", "", self.F2)]
        out += [(f"E{i + 1}", "", e) for i, e in enumerate(self.E)]
        for n in range(len(self.C_v)):
            out += [("C_v", n, self.C_v[n]), ("v_lip1", n, self.v_lip1[n]), ("v_lip2", n, self.v_lip2[n]),
                    ("v_star", n, self.v_star[n]), ("v_lip", n, self.v_lip[n])]
        out += [("step_term", k, t) for k, t in enumerate(self.step_terms)]
        out += [("smoothing", "", self.smoothing), ("epsilon_N", "", self.total)]
        return out

    def to_text(self):
        lines = ["a-priori bound (typically loose; compare with Monte Carlo)"]
        lines += [f"{name:<10} {str(n):>4}  {val:.6e}" for name, n, val in self.rows()]
        return "\n".join(lines)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["constant", "n", "value"])
        for name, n, val in self.rows():
            w.writerow([name, n, repr(float(val))])
        return buf.getvalue()


def propagate_v_constants(inp: BoundInputs) -> BoundBreakdown:
    N = inp.N
    Ct, Cl, Cc, Clam = inp.C_tstar, inp.C_l, inp.C_c, inp.C_lambda
    C_v, v1, v2, vs, vl = (np.zeros(N + 1) for _ in range(5))
    growth = math.exp(Ct * Clam)
    base = Ct * Cl + Cc
    for n in range(1, N + 1):
        K = K_of(inp, v1[n - 1], C_v[n - 1], vs[n - 1])
        C_v[n] = n * base
        v1[n] = growth * (K + n * Ct * inp.lip_lambda * base) + inp.Ct_l1
        v2[n] = growth * (Ct * Cl * Clam + 2 * Cl + Clam * Cc + (2 * n - 1) * Clam * base) + Cl
        vs[n] = v1[n] + inp.lip_tstar * v2[n]
        vl[n] = K
    F1, F2 = lipschitz_F(inp)
    return BoundBreakdown(inp, F1, F2, E_constants(inp), C_v, v1, v2, vs, vl)


def epsilon_breakdown(inp: BoundInputs) -> BoundBreakdown:
    bd = propagate_v_constants(inp)
    N = inp.N
    dZ, dS = inp.dist_Z, inp.dist_S
    # [v_k] on the forward index k is the constant with N - k jumps left
    vk = bd.v_lip[::-1]
    terms = np.array([2 * vk[k + 1] * dZ[k + 1] + (2 * vk[k] + bd.F1) * dZ[k] + bd.F2 * dS[k + 1]
                      for k in range(N)])
    smoothing = N * inp.C_c * inp.C_lambda / inp.A if inp.C_c > 0 else 0.0
    bd.step_terms = terms
    bd.smoothing = smoothing
    bd.total = float(terms.sum() + smoothing) if N else 0.0
    return bd


def epsilon_N(inp: BoundInputs) -> float:
    return epsilon_breakdown(inp).total
