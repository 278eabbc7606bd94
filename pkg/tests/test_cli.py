import csv
import io

import pytest
import yaml
from pytest import approx

from pdmpquant import cli
from pdmpquant.errors import NumericError


def run(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


@pytest.fixture(scope="module")
def toy_grid(tmp_path_factory):
    path = str(tmp_path_factory.mktemp("grids") / "toy.json.gz")
    code, text = run("quantize", "--model", "toy-constant", "--jumps", "2", "--grid-points", "40",
                     "--estimation-samples", "20000", "--seed", "3", "--out", path)
    assert code == 0, text
    return path


@pytest.fixture(scope="module")
def repair_grid(tmp_path_factory):
    path = str(tmp_path_factory.mktemp("grids") / "repair.json")
    code, text = run("quantize", "--model", "repair-workshop", "--jumps", "18", "--grid-points", "30",
                     "--estimation-samples", "20000", "--seed", "1", "--out", path)
    assert code == 0, text
    return path


def test_quantize_reports_distortions(toy_grid):
    code, text = run("quantize", "--model", "toy-constant", "--jumps", "2", "--grid-points", "10",
                     "--estimation-samples", "1000", "--out", toy_grid + ".small.json")
    assert code == 0
    assert text.count("distortion") == 3 and "wrote" in text


def test_quantize_is_byte_deterministic(tmp_path):
    paths = [str(tmp_path / f"g{i}.json.gz") for i in range(2)]
    for p in paths:
        assert run("quantize", "--model", "toy-constant", "--jumps", "2", "--grid-points", "15",
                   "--estimation-samples", "5000", "--seed", "9", "--out", p)[0] == 0
    with open(paths[0], "rb") as a, open(paths[1], "rb") as b:
        assert a.read() == b.read()


def test_evaluate_and_bound(toy_grid):
    code, text = run("evaluate", "--model", "toy-constant", "--grid", toy_grid, "--values")
    assert code == 0
    assert text.startswith("V0 = ") and "a-priori bound" in text and "v[2]" in text
    again = run("evaluate", "--model", "toy-constant", "--grid", toy_grid, "--values")[1]
    assert again.split("time")[0] == text.split("time")[0]
    code, table = run("bound", "--model", "toy-constant", "--grid", toy_grid, "--csv")
    assert code == 0
    rows = [r for r in csv.reader(io.StringIO(table)) if r]
    assert rows[0] == ["constant", "n", "value"]
    eps = float(rows[-1][2])
    line = [l for l in text.splitlines() if l.startswith("a-priori")][0]
    assert float(line.split("=")[1]) == approx(eps, rel=1e-5)


def test_evaluate_zero_boundary_cost(toy_grid):
    code, text = run("evaluate", "--model", "toy-constant", "--grid", toy_grid, "--value", "0")
    assert code == 0
    code, table = run("bound", "--model", "toy-constant", "--grid", toy_grid, "--value", "0", "--csv")
    smoothing = [r for r in csv.reader(io.StringIO(table)) if r and r[0] == "smoothing"][0]
    assert float(smoothing[2]) == 0.0


def test_repair_workflow(repair_grid, tmp_path):
    code, text = run("evaluate", "--grid", repair_grid)
    assert code == 0
    v = float(text.split("=")[1].split()[0])
    assert 400 < v < 700
    out = str(tmp_path / "sweep.csv")
    code, text = run("sweep", "--grid", repair_grid, "--range", "0", "1", "0.25", "--out", out)
    assert code == 0 and text.startswith("argmax x = ")
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["parameter", "value", "epsilon", "seed"]
    assert [float(r["parameter"]) for r in rows] == [0, 0.25, 0.5, 0.75, 1.0]
    # the linear-basis sweep agrees with a direct evaluation
    direct = run("evaluate", "--grid", repair_grid, "--value", "0.75")[1]
    assert float(rows[3]["value"]) == approx(float(direct.split("=")[1].split()[0]), rel=1e-9)


def test_mc_and_estimate_n():
    code, text = run("mc", "--model", "toy-constant", "--jumps", "2", "--n-sims", "2000", "--seed", "5")
    assert code == 0 and text.startswith("mean ")
    assert text.split("time")[0] == run("mc", "--model", "toy-constant", "--jumps", "2", "--n-sims", "2000",
                                        "--seed", "5")[1].split("time")[0]
    code, text = run("estimate-n", "--model", "repair-workshop", "--target-prob", "1e-2")
    assert code == 0 and text.startswith("N = ")


def test_config_include_and_show_config(tmp_path):
    base = tmp_path / "base.yaml"
    base.write_text(yaml.safe_dump({"model": "corrosion", "grid_points": 50, "seed": 4}))
    top = tmp_path / "run.yaml"
    top.write_text(yaml.safe_dump({"include": "base.yaml", "seed": 11}))
    code, text = run("show-config", "--config", str(top), "--grid-points", "60")
    assert code == 0
    cfg = yaml.safe_load(text)
    assert cfg["model"] == "corrosion" and cfg["seed"] == 11 and cfg["grid_points"] == 60
    nested = tmp_path / "nested.yaml"
    nested.write_text(yaml.safe_dump({"include": "run.yaml"}))
    assert run("show-config", "--config", str(nested))[0] == 2


def test_exit_codes(toy_grid, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("unknown_key: 1\n")
    assert run("show-config", "--config", str(bad))[0] == 2
    assert run("evaluate", "--model", "toy-constant")[0] == 2                 # no grid
    assert run("evaluate", "--model", "toy-constant", "--grid", str(tmp_path / "missing.json"))[0] == 2
    assert run("mc", "--model", "nope")[0] == 2
    # grid built for another model or other parameters
    assert run("evaluate", "--model", "repair-workshop", "--grid", toy_grid)[0] == 3
    cfg = tmp_path / "params.yaml"
    cfg.write_text(yaml.safe_dump({"model": "toy-constant", "params": {"rate": 2.0}}))
    assert run("evaluate", "--config", str(cfg), "--grid", toy_grid)[0] == 3


def test_numeric_failure_exit_code(toy_grid, monkeypatch):
    def boom(*a, **k):
        raise NumericError("quadrature did not converge")
    monkeypatch.setattr(cli, "evaluate", boom)
    assert run("evaluate", "--model", "toy-constant", "--grid", toy_grid)[0] == 4
