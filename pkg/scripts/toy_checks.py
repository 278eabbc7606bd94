"""Toy model checks: exact two-jump value, smoothing gap, horizon bounds against A and B."""
import math

import numpy as np
from scipy import integrate

from pdmpquant.functional import backward_evaluate
from pdmpquant.horizon import augment, estimate_N, horizon_bounds
from pdmpquant.models.toy import ToyConstantModel, ToyConstantParams, discounted_functional
from pdmpquant.montecarlo import mc_functional, mc_horizon_functional
from pdmpquant.pdmp import State
from pdmpquant.quantizer import ClvqConfig, train

R, C = 0.5, 2.0
model = augment(ToyConstantModel(ToyConstantParams()), "toy-constant")
x0 = State(0, (0.0, 0.0))
f = discounted_functional(R, C)


def step(t0):
    g = lambda s, hit: math.exp(-R * t0) * ((1 - math.exp(-R * s)) / R + C * math.exp(-R) * hit)
    body = integrate.quad(lambda s: g(s, 0) * math.exp(-s), 0, 1)[0]
    return body + math.exp(-1) * g(1.0, 1)


exact = step(0.0) + integrate.quad(lambda s: step(s) * math.exp(-s), 0, 1)[0] + math.exp(-1) * step(1.0)
mc = mc_functional(model, x0, f, 2, 55, 1_000_000)
print(f"J2 exact {exact:.6f}   MC {mc.mean:.6f} +- {mc.stderr:.1e}")
for K in (50, 200, 500):
    tree = train(model, x0, 2, ClvqConfig(grid_size=K, training_samples=100_000, estimation_samples=1_000_000,
                                          seed=5))
    for A in (None, 100.0, 1000.0):
        v = backward_evaluate(tree, f, model, A=A).V0
        print(f"  K={K:4d} A={'default' if A is None else A:>7}  V0={v:.6f}  rel.err={(v - exact) / exact:+.3%}")

print("smoothing gap |J - J^A| against the bound N C_c C_lambda / A")
for A in (10.0, 100.0, 1000.0):
    sm = mc_functional(model, x0, f, 2, 55, 1_000_000, A=A)
    print(f"  A={A:6g}  gap {abs(sm.mean - mc.mean):.2e}  bound {2 * C / A:.2e}")

t_f = 1.5
N = estimate_N(model, x0, t_f, 1e-3, 100_000, 70)
mch = mc_horizon_functional(model, x0, f, t_f, N, 77, 1_000_000)
print(f"horizon t_f={t_f}, N={N}: MC {mch.mean:.5f} +- {mch.stderr:.1e}")
tree = train(model, x0, N, ClvqConfig(grid_size=1000, training_samples=20_000, estimation_samples=1_000_000,
                                      seed=7))
for A in (None, 25.0, 50.0, 100.0, 200.0):
    for B in (None, 50.0):
        r = horizon_bounds(tree, f, t_f, model, A=A, B=B)
        print(f"  A={r.A:8.2f} B={r.B:8.2f}  [{r.lower:.5f}, {r.upper:.5f}]")
