import gzip

import numpy as np
import pytest
from pytest import approx

from pdmpquant.errors import ConfigError, QuantizationError
from pdmpquant.gridio import load_tree, save_tree
from pdmpquant.horizon import augment
from pdmpquant.models.corrosion import CorrosionParams, corrosion_model
from pdmpquant.models.repair import RepairWorkshopParams, repair_workshop_model
from pdmpquant.models.toy import ToyConstantModel, ToyConstantParams
from pdmpquant.pdmp import State
from pdmpquant.quantizer import ClvqConfig, Codebook, distortion, project, train

TOY = augment(ToyConstantModel(ToyConstantParams()), "toy-constant")
X0 = State(0, (0.0, 0.0))


def small_tree(model=TOY, x0=X0, N=3, K=20, seed=1, **kw):
    cfg = ClvqConfig(grid_size=K, training_samples=kw.pop("training", 20 * K),
                     estimation_samples=kw.pop("estimation", 20_000), seed=seed, **kw)
    return train(model, x0, N, cfg)


def codebook(modes, pts):
    pts = np.asarray(pts, dtype=float)
    return Codebook(1, np.asarray(modes), pts[:, :-1], pts[:, -1], np.ones(len(modes)) / len(modes))


def test_project_examples():
    cb = codebook([0, 0, 1], [[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
    assert project(cb, (State(0, (0.4,)), 0.4)) == 0
    assert project(cb, (State(0, (0.6,)), 0.6)) == 1
    assert project(cb, (State(0, (0.5,)), 0.5)) == 0   # tie: lowest index
    assert project(cb, (State(1, (5.0,)), 5.0)) == 2   # mode purity beats distance
    with pytest.raises(QuantizationError):
        project(cb, (State(2, (0.0,)), 0.0))


def test_project_is_idempotent_on_nodes():
    tree = small_tree()
    for cb in tree.codebooks:
        for i, node in enumerate(cb.nodes):
            assert project(cb, node) == i


def test_config_validation():
    with pytest.raises(ConfigError):
        ClvqConfig(grid_size=0, training_samples=100)
    with pytest.raises(ConfigError):
        ClvqConfig(grid_size=50, training_samples=100)
    with pytest.raises(ConfigError):
        ClvqConfig(grid_size=5, training_samples=100, p=0.5)


def test_zero_jumps_tree():
    tree = small_tree(N=0)
    assert tree.grid_sizes == [1]
    assert tree.codebooks[0].weights[0] == 1.0
    assert tree.counts == []


def test_single_node_is_the_mean():
    model = augment(repair_workshop_model(RepairWorkshopParams()))
    x0 = State(0, (0.0, 0.0))
    tree = small_tree(model, x0, N=1, K=1, training=20_000, estimation=20_000, seed=2)
    cb = tree.codebooks[1]
    # one node per visited mode, each the mean of its mode's draws
    from pdmpquant.pdmp import simulate_paths
    p = simulate_paths(model, x0, 1, 200_000, 5)
    for i, m in enumerate(cb.modes):
        sel = p.modes[:, 1] == m
        assert cb.sojourns[i] == approx(p.sojourns[sel, 1].mean(), rel=0.02)


def test_transitions_row_stochastic_and_weights_sum_to_one(registered):
    entry, params, model, x0 = registered
    tree = small_tree(model, x0, N=3, K=15, estimation=10_000)
    for cb in tree.codebooks:
        assert cb.weights.sum() == approx(1.0, abs=1e-12)
        assert (cb.weights >= 0).all()
    for k, P in enumerate(tree.transitions, start=1):
        rs = np.asarray(P.sum(axis=1)).ravel()
        visited = ~tree.unvisited_rows(k)
        assert np.allclose(rs[visited], 1.0, atol=1e-12)
        assert (rs[~visited] == 0).all()
        # weights propagate through the transitions
        w = tree.codebooks[k - 1].weights @ P
        assert np.allclose(w, tree.codebooks[k].weights, atol=1e-12)


def test_codebooks_are_mode_pure_and_inside_domain():
    model = augment(repair_workshop_model(RepairWorkshopParams()))
    tree = small_tree(model, State(0, (0.0, 0.0)), N=4, K=30)
    for cb in tree.codebooks[1:]:
        assert set(np.unique(cb.modes)) <= {0, 1, 2}
        assert (cb.coords[:, 0] == 0).all()   # post-jump age is always 0
        assert (cb.sojourns > 0).all()
        # S_k is spent in the previous mode: repair/maintenance last 7, operation at most 365
        assert (cb.sojourns[cb.modes == 0] <= 7.0 + 1e-9).all()
        assert (cb.sojourns <= 365.0 + 1e-9).all()


def test_corrosion_codebooks_have_zero_time_in_mode():
    tree = small_tree(augment(corrosion_model(CorrosionParams())), State(0, (0.0, 0.0, 5.5e-6, 0.0)),
                      N=2, K=10)
    for cb in tree.codebooks:
        assert (cb.coords[:, 1] == 0).all()


def test_training_is_bitwise_deterministic():
    a, b = small_tree(seed=7), small_tree(seed=7)
    for ca, cb in zip(a.codebooks, b.codebooks):
        assert np.array_equal(ca.points, cb.points) and np.array_equal(ca.weights, cb.weights)
    c = small_tree(seed=8)
    assert not np.array_equal(a.codebooks[2].points, c.codebooks[2].points)


def test_degenerate_chain_collapses():
    toy = augment(ToyConstantModel(ToyConstantParams(rate=0.0)), "toy-constant")
    tree = small_tree(toy, X0, N=3, K=10)
    assert tree.grid_sizes == [1, 1, 1, 1]
    assert tree.distortion == approx(np.zeros(4), abs=1e-12)
    assert tree.codebooks[3].coords[0, -1] == 3.0


def test_distortion_decreases_with_grid_size():
    model = augment(repair_workshop_model(RepairWorkshopParams()))
    x0 = State(0, (0.0, 0.0))
    d = []
    for K in (5, 20, 80):
        tree = small_tree(model, x0, N=3, K=K, training=200 * K, seed=3)
        d.append(distortion(tree, model, x0, 20_000, 99))
    d = np.array(d)
    assert (d[1, 1:] < d[0, 1:]).all() and (d[2, 1:] < d[1, 1:]).all()


def test_grid_round_trip_is_bit_exact(tmp_path):
    tree = small_tree()
    for name in ("g.json", "g.json.gz"):
        path = tmp_path / name
        save_tree(tree, str(path))
        back = load_tree(str(path))
        assert back.model_id == tree.model_id and back.x0 == tree.x0 and back.N == tree.N
        for a, b in zip(tree.codebooks, back.codebooks):
            assert np.array_equal(a.points, b.points) and np.array_equal(a.modes, b.modes)
            assert np.array_equal(a.weights, b.weights)
        for a, b in zip(tree.transitions, back.transitions):
            assert (a != b).nnz == 0
        assert np.array_equal(tree.distortion, back.distortion)


def test_grid_files_are_byte_identical(tmp_path):
    a, b = small_tree(seed=4), small_tree(seed=4)
    save_tree(a, str(tmp_path / "a.json.gz"))
    save_tree(b, str(tmp_path / "b.json.gz"))
    assert (tmp_path / "a.json.gz").read_bytes() == (tmp_path / "b.json.gz").read_bytes()
    assert gzip.decompress((tmp_path / "a.json.gz").read_bytes()).startswith(b"{")


def test_corrupt_grid_file_is_a_config_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_tree(str(path))
