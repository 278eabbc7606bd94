import numpy as np
import pytest
from pytest import approx

from oracles import eps_oracle, random_constants
from pdmpquant.bounds import (BoundInputs, E_constants, K_of, epsilon_breakdown, epsilon_N, lipschitz_F,
                              propagate_v_constants)
from pdmpquant.errors import ConfigError
from pdmpquant.functional import CostMeta
from pdmpquant.pdmp import LipschitzMeta


def inputs(N=3, A=10.0, dZ=None, dS=None, **kw):
    base = dict(C_l=1.0, lip_l1=1.0, lip_l2=1.0, C_c=1.0, lip_c_star=2.0, C_lambda=1.0, lip_lambda=1.0,
                C_tstar=1.0, lip_tstar=0.5, lip_Q=1.0)
    base.update(kw)
    dZ = np.full(N + 1, 0.01) if dZ is None else dZ
    dS = np.full(N + 1, 0.02) if dS is None else dS
    return BoundInputs(N=N, A=A, dist_Z=dZ, dist_S=dS, **base)


def from_oracle_set(c, dZ, dS):
    Q = max(c["Q"], 1.0) * (1 + c["ts"]) if c["augmented"] else c["Q"]
    return BoundInputs(N=c["N"], A=c["A"], C_l=c["Cl"], lip_l1=c["l1"], lip_l2=c["l2"], C_c=c["Cc"],
                       lip_c_star=c["cstar"], C_lambda=c["Clam"], lip_lambda=c["lam1"], C_tstar=c["Ct"],
                       lip_tstar=c["ts"], lip_Q=Q, dist_Z=dZ, dist_S=dS,
                       B=c["B"] if c["Cc"] > 0 else None, running_indicator=c["horizon_l"],
                       augmented=c["augmented"])


def test_lipschitz_F_examples():
    F1, F2 = lipschitz_F(inputs(C_l=1.0, lip_l1=1.0, lip_c_star=2.0, lip_tstar=0.5, C_c=1.0, A=10.0))
    assert F1 == approx(8.0)
    assert F2 == approx(11.0)
    F1, F2 = lipschitz_F(inputs(C_c=0.0, lip_c_star=0.0, C_tstar=2.0, lip_l1=0.7, C_l=3.0))
    assert F1 == approx(1.4) and F2 == approx(3.0)


def test_K_examples():
    zero = inputs(C_l=0, lip_l1=0, lip_l2=0, C_c=0, lip_c_star=0, lip_lambda=0, lip_Q=0)
    assert E_constants(zero)[1] == 0.0
    assert K_of(zero, 0, 0, 0) == 0.0
    E3 = E_constants(inputs(C_tstar=2.0, C_lambda=0.5, lip_Q=1.0))[2]
    assert E3 == approx(2.0)
    one = inputs(A=1.0, lip_tstar=1.0, lip_c_star=1.0)
    # all constants 1: E1 = 2+3+2+5, E2 = 1, E3 = 2, E4 = 2+3
    assert E_constants(one) == approx((12.0, 1.0, 2.0, 5.0))
    assert K_of(one, 1.0, 1.0, 1.0) == approx(12 + 1 + 2 + 5 + 1)


def test_propagation_identities():
    bd = propagate_v_constants(inputs(N=6))
    inp = bd.inputs
    assert bd.C_v[1] == approx(inp.C_tstar * inp.C_l + inp.C_c)
    assert np.allclose(bd.v_star, bd.v_lip1 + inp.lip_tstar * bd.v_lip2)
    assert (np.diff(bd.v_lip) > 0).all()


def test_zero_jumps():
    bd = epsilon_breakdown(inputs(N=0))
    assert bd.total == 0.0 and bd.smoothing == 0.0


def test_zero_distortion_leaves_smoothing_term():
    z = np.zeros(19)
    inp = inputs(N=18, A=100.0, C_lambda=0.01, dZ=z, dS=z)
    assert epsilon_N(inp) == 18 * 1.0 * 0.01 / 100.0
    assert epsilon_N(inputs(N=5, C_c=0, lip_c_star=0, dZ=np.zeros(6), dS=np.zeros(6))) == 0.0


def test_eps_monotone_in_distortions():
    rng = np.random.default_rng(3)
    base = inputs(N=5, dZ=rng.uniform(0, 0.1, 6), dS=rng.uniform(0, 0.1, 6))
    e0 = epsilon_N(base)
    for i in range(6):
        dZ = base.dist_Z.copy()
        dZ[i] += 0.05
        dS = base.dist_S.copy()
        dS[i] += 0.05
        assert epsilon_N(inputs(N=5, dZ=dZ, dS=base.dist_S)) >= e0
        assert epsilon_N(inputs(N=5, dZ=base.dist_Z, dS=dS)) >= e0


def test_doubling_distortions_doubles_the_quantization_part():
    rng = np.random.default_rng(4)
    dZ, dS = rng.uniform(0, 0.1, 8), rng.uniform(0, 0.1, 8)
    a = epsilon_breakdown(inputs(N=7, dZ=dZ, dS=dS))
    b = epsilon_breakdown(inputs(N=7, dZ=2 * dZ, dS=2 * dS))
    assert b.total - b.smoothing == approx(2 * (a.total - a.smoothing), rel=1e-12)


def test_eps_monotone_in_N():
    prev = 0.0
    for N in range(0, 10):
        e = epsilon_N(inputs(N=N, dZ=np.full(N + 1, 0.01), dS=np.full(N + 1, 0.01)))
        assert e >= prev
        prev = e


def test_matches_hand_coded_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        c, dZ, dS = random_constants(rng)
        assert epsilon_N(from_oracle_set(c, dZ, dS)) == approx(eps_oracle(c, dZ, dS), rel=1e-12)


def test_breakdown_renders():
    bd = epsilon_breakdown(inputs())
    assert bd.to_text().startswith("a-priori bound")
    lines = bd.to_csv().splitlines()
    assert lines[0] == "constant,n,value"
    assert float(lines[-1].split(",")[-1]) == bd.total
    assert sum(bd.step_terms) + bd.smoothing == approx(bd.total)


def test_refusals():
    with pytest.raises(ConfigError, match="missing Lipschitz constant: lip_Q"):
        inputs(lip_Q=None)
    meta = LipschitzMeta(C_lambda=1.0, lip_lambda=0.0, C_tstar=None, lip_tstar=0.0, lip_Q=1.0)
    with pytest.raises(ConfigError):
        BoundInputs.from_parts(meta, CostMeta(C_l=1.0), N=2, A=None, dist_Z=np.zeros(3), dist_S=np.zeros(3))
    inp = BoundInputs.from_parts(meta, CostMeta(C_l=1.0), N=2, A=None, dist_Z=np.zeros(3), dist_S=np.zeros(3),
                                 t_f=7.0)
    assert inp.C_tstar == 7.0
    with pytest.raises(ConfigError):
        inputs(A=None)   # boundary cost without smoothing level
