import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from pytest import approx

from pdmpquant.errors import DomainError
from pdmpquant.horizon import augment
from pdmpquant.models.corrosion import CorrosionParams, corrosion_model
from pdmpquant.models.repair import RepairWorkshopParams, repair_workshop_model
from pdmpquant.models.toy import ToyConstantModel, ToyConstantParams
from pdmpquant.pdmp import (PdmpModel, State, cumulative_hazard, exit_time, flow_at, integrate_along_flow,
                            sample_sojourn, sample_sojourns, simulate_chain, simulate_paths)
from pdmpquant.streams import make_rng, split

REPAIR = repair_workshop_model(RepairWorkshopParams())
CORROSION = corrosion_model(CorrosionParams())


class QuadratureToy(ToyConstantModel):
    """Toy without closed forms: quadrature hazard, bisection inverse."""

    def cumulative_hazard(self, mode, coords, t):
        return PdmpModel.cumulative_hazard(self, mode, coords, t)

    def hazard_inverse(self, mode, coords, e):
        return None


def test_streams_reproducible():
    a = make_rng(3).random(5)
    b = make_rng(3).random(5)
    assert (a == b).all()
    c1, c2 = split(make_rng(3), 2)
    assert not (c1.random(5) == c2.random(5)).all()


def test_flow_zero_is_identity(registered):
    entry, params, model, x0 = registered
    x = flow_at(model, x0, 0.0)
    assert x == x0


@given(zeta=st.floats(0, 300), s=st.floats(0, 30), t=st.floats(0, 30), mode=st.integers(0, 2))
def test_repair_semigroup(zeta, s, t, mode):
    model = augment(REPAIR)
    x = State(mode, (zeta if mode == 0 else zeta / 100, 12.0))
    if s + t > exit_time(model, x):
        return
    a = flow_at(model, flow_at(model, x, s), t)
    b = flow_at(model, x, s + t)
    assert np.allclose(a.coords, b.coords, rtol=1e-9, atol=1e-12)


@given(d=st.floats(0, 1), s=st.floats(0, 1e5), rho=st.floats(1e-7, 1e-5), u=st.floats(0, 1e5),
       v=st.floats(0, 1e5), mode=st.integers(0, 2))
def test_corrosion_semigroup(d, s, rho, u, v, mode):
    model = augment(CORROSION)
    x = State(mode, (d, s, rho, 100.0))
    a = flow_at(model, flow_at(model, x, u), v)
    b = flow_at(model, x, u + v)
    assert np.allclose(a.coords, b.coords, rtol=1e-9, atol=1e-15)


def test_corrosion_flow_example():
    x = State(1, (0.0, 0.0, 1e-6))
    y = flow_at(CORROSION, x, 200000.0)
    assert y.coords[0] == approx(1e-6 * 200000 * math.exp(-0.5), rel=1e-12)
    assert y.coords[0] == approx(0.12131, abs=5e-6)
    assert y.coords[1:] == (200000.0, 1e-6)


def test_flow_beyond_exit_time_is_rejected():
    with pytest.raises(DomainError):
        flow_at(REPAIR, State(0, (300.0,)), 70.0)
    with pytest.raises(DomainError):
        flow_at(REPAIR, State(0, (0.0,)), -1.0)


def test_cumulative_hazard_basics(toy):
    x = State(0, (0.2,))
    assert cumulative_hazard(toy, x, 0.0) == 0.0
    assert cumulative_hazard(toy, x, 0.5) == approx(0.5)


def test_weibull_hazard_closed_form_matches_quadrature():
    rng = np.random.default_rng(1)
    z = rng.uniform(0, 300, 50)
    t = rng.uniform(0, 1, 50) * (365 - z)
    mode = np.zeros(50, dtype=int)
    closed = REPAIR.cumulative_hazard(mode, z[:, None], t)
    quad = integrate_along_flow(REPAIR, REPAIR.jump_rate, mode, z[:, None], t)
    assert np.allclose(closed, ((z + t) / 600) ** 2 - (z / 600) ** 2, rtol=1e-14)
    assert np.allclose(quad, closed, rtol=1e-10)


def test_zero_hazard_forces_boundary():
    toy = ToyConstantModel(ToyConstantParams(rate=0.0, exit_time=5.0))
    for seed in range(20):
        s, hit = sample_sojourn(toy, State(0, (0.0,)), seed)
        assert s == 5.0 and hit


def test_boundary_frequency_matches_atom(toy):
    n = 100_000
    s, hit = sample_sojourns(toy, np.zeros(n, dtype=int), np.zeros((n, 1)), 11)
    p = math.exp(-1.0)
    assert abs(hit.mean() - p) < 3 * math.sqrt(p * (1 - p) / n)
    assert (s[hit] == 1.0).all() and (s[~hit] < 1.0).all()


def test_bisection_matches_closed_form_inverse():
    toy = ToyConstantModel(ToyConstantParams(rate=1.3, exit_time=2.0))
    quad = QuadratureToy(ToyConstantParams(rate=1.3, exit_time=2.0))
    n = 2000
    m, c = np.zeros(n, dtype=int), np.random.default_rng(0).uniform(0, 1.5, (n, 1))
    s1, h1 = sample_sojourns(toy, m, c, 5)
    s2, h2 = sample_sojourns(quad, m, c, 5)
    assert (h1 == h2).all()
    assert np.allclose(s1, s2, rtol=1e-8, atol=1e-9)


def test_corrosion_first_sojourn_is_exponential():
    n = 100_000
    x = np.zeros((n, 3))
    x[:, 2] = 5e-6
    s, hit = sample_sojourns(CORROSION, np.zeros(n, dtype=int), x, 3)
    assert not hit.any()
    assert s.mean() == approx(17520, rel=3 / math.sqrt(n) * 1.5)


def test_weibull_sojourn_law_ks():
    n = 100_000
    s, hit = sample_sojourns(REPAIR, np.zeros(n, dtype=int), np.zeros((n, 1)), 21)
    grid = np.linspace(0, 365, 200, endpoint=False)
    emp = np.array([(s > g).mean() for g in grid])
    exact = np.exp(-(grid / 600) ** 2)
    # 1 % Kolmogorov-Smirnov critical value
    assert np.max(np.abs(emp - exact)) < 1.63 / math.sqrt(n)
    assert hit.mean() == approx(math.exp(-(365 / 600) ** 2), abs=4 / math.sqrt(n))


def test_simulate_chain_zero_jumps(toy):
    path = simulate_chain(toy, State(0, (0.3,)), 0, 1)
    assert len(path) == 1
    assert path.steps == [(State(0, (0.3,)), 0.0, 0.0)]


def test_chain_structure(registered):
    entry, params, model, x0 = registered
    p = simulate_paths(model, x0, 6, 2000, 4)
    assert (p.sojourns[:, 0] == 0).all() and (p.times[:, 0] == 0).all()
    assert np.allclose(p.times[:, 1:], np.cumsum(p.sojourns[:, 1:], axis=1))
    assert (np.diff(p.times, axis=1) > 0).all()
    for k in range(1, 7):
        ts = model.exit_time(p.modes[:, k - 1], p.coords[:, k - 1])
        fin = np.isfinite(ts)
        assert (p.sojourns[fin, k] <= ts[fin]).all()


def test_kernel_never_self_jumps(registered):
    entry, params, model, x0 = registered
    p = simulate_paths(model, x0, 5, 2000, 8)
    for k in range(1, 6):
        pre = model.flow(p.modes[:, k - 1], p.coords[:, k - 1], p.sojourns[:, k])
        same = (p.modes[:, k] == p.modes[:, k - 1]) & np.all(p.coords[:, k] == pre, axis=1)
        assert not same.any()


def test_jump_times_grow():
    p = simulate_paths(augment(REPAIR), State(0, (0.0, 0.0)), 30, 500, 2)
    means = p.times.mean(axis=0)
    assert (np.diff(means) > 0).all()
    assert means[30] > 2 * means[10]


def test_repair_first_jump():
    model = augment(REPAIR)
    for seed in range(30):
        path = simulate_chain(model, State(0, (0.0, 0.0)), 1, seed)
        z1 = path.states[1]
        if path.boundary[1]:
            assert z1.mode == 2 and path.sojourns[1] == 365.0
        else:
            assert z1.mode == 1 and path.sojourns[1] < 365.0
        assert z1.coords[0] == 0.0 and z1.coords[1] == path.times[1]


def test_repair_T18_mostly_beyond_five_years():
    p = simulate_paths(augment(REPAIR), State(0, (0.0, 0.0)), 18, 10_000, 9)
    assert (p.times[:, 18] > 5 * 365).mean() > 0.99
