"""Brute-force Monte Carlo references.

Chains are simulated jump by jump and the functional is accumulated on the
fly with the exact boundary indicator (the sampler's flag), or with the
tent ``delta_A`` when a smoothing level is requested.  Simulations are
split in chunks with independently derived streams and reduced in chunk
order, so an estimate depends only on the seed.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .functional import boundary_term, delta_A, running_integral_L
from .pdmp import sample_sojourns
from .streams import make_rng, split

CHUNK = 100_000


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n_sims: int
    seed: Optional[int] = None
    seconds: float = 0.0

    def to_dict(self):
        return {"mean": self.mean, "stderr": self.stderr, "n_sims": self.n_sims, "seed": self.seed,
                "seconds": self.seconds}


def _simulate_costs(model, x0, N, n, rng, step_cost):
    mode = np.full(n, x0.mode, dtype=np.int64)
    coords = np.tile(np.asarray(x0.coords, dtype=float), (n, 1))
    total = np.zeros(n)
    clock = np.zeros(n)
    for _ in range(N):
        tstar = np.asarray(model.exit_time(mode, coords), dtype=float)
        s, hit = sample_sojourns(model, mode, coords, rng)
        total += step_cost(mode, coords, s, hit, tstar, clock)
        pre = model.flow(mode, coords, s)
        mode, coords = model.kernel(mode, pre, hit, rng)
        clock += s
    return total


def _run(model, x0, N, rng, n_sims, step_cost, chunk):
    if n_sims < 2:
        raise ConfigError("n_sims must be at least 2")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    t0 = time.perf_counter()
    n_chunks = -(-n_sims // chunk)
    parts = []
    for i, r in enumerate(split(make_rng(rng), n_chunks)):
        size = min(chunk, n_sims - i * chunk)
        parts.append(_simulate_costs(model, x0, N, size, r, step_cost))
    x = np.concatenate(parts)
    return McEstimate(float(x.mean()), float(x.std(ddof=1) / np.sqrt(n_sims)), n_sims, seed,
                      time.perf_counter() - t0)


def mc_functional(model, x0, functional, N, rng, n_sims=1_000_000, A=None, chunk=CHUNK) -> McEstimate:
    """Estimate ``E[sum_k L(Z_{k-1}, S_k) + c(boundary point) 1{forced jump}]`` over ``N`` jumps.

    With ``A`` the indicator is replaced by ``delta_A``, giving the
    smoothed functional instead.
    """
    def step_cost(mode, coords, s, hit, tstar, clock):
        out = running_integral_L(functional, model, mode, coords, s)
        if functional.boundary_cost is not None:
            c = boundary_term(functional, model, mode, coords, tstar)
            w = hit.astype(float) if A is None else delta_A(tstar, s, A)
            out = out + c * w
        return out

    return _run(model, x0, N, rng, n_sims, step_cost, chunk)


def mc_horizon_functional(model, x0, functional, t_f, N, rng, n_sims=1_000_000, chunk=CHUNK) -> McEstimate:
    """Horizon version: running cost integrated up to ``t_f``, boundary costs paid for ``T_j <= t_f``.

    Time is counted from ``x0``; for a clock-augmented model started at
    clock zero this is the clock itself.
    """
    def step_cost(mode, coords, s, hit, tstar, clock):
        u = np.minimum(s, np.maximum(t_f - clock, 0.0))
        out = running_integral_L(functional, model, mode, coords, u)
        if functional.boundary_cost is not None:
            c = boundary_term(functional, model, mode, coords, tstar)
            out = out + c * (hit & (clock + s <= t_f))
        return out

    return _run(model, x0, N, rng, n_sims, step_cost, chunk)
