import json

import numpy as np
import pytest

from epival import convexfn as cf
from epival.cli import main
from epival.harness import default_zeta, gen_max_affine
from epival.hessian import Window
from epival.serialize import dumps, read_json


@pytest.fixture
def files(tmp_path):
    v = gen_max_affine(0, 2, 5)
    paths = {
        "v": tmp_path / "v.json",
        "u": tmp_path / "u.json",
        "z": tmp_path / "z.json",
        "w": tmp_path / "w.json",
    }
    paths["v"].write_text(dumps(v))
    paths["u"].write_text(dumps(cf.conjugate(v)))
    paths["z"].write_text(dumps(default_zeta(2)))
    paths["w"].write_text(dumps(Window.boxes([-1, -1], [1, 1], [-1, -1], [1, 1])))
    return {k: str(p) for k, p in paths.items()}


def test_conjugate_roundtrip(files, tmp_path):
    out1, out2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    assert main(["fn", "conjugate", "--in", files["v"], "--out", out1]) == 0
    assert main(["fn", "conjugate", "--in", out1, "--out", out2]) == 0
    v = cf.fn_from_dict(read_json(files["v"]))
    assert cf.same_function(cf.fn_from_dict(read_json(out2)), v)


def test_decomp_reconstruction(files, capsys):
    assert main(["decomp", "run", "--oracle", "zeta:" + files["z"], "--fn", files["u"], "--n", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert sum(out["components"]) == pytest.approx(out["direct"], abs=1e-12)


def test_decomp_mixed_oracle(files, capsys):
    assert main(["decomp", "run", "--oracle", "5*const:1+2*zeta:" + files["z"], "--fn", files["u"],
                 "--n", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["components"][0] == pytest.approx(5.0)
    assert out["components"][1] == pytest.approx(0.0, abs=1e-12)


def test_unknown_flag(capsys):
    assert main(["fn", "conjugate", "--bogus"]) == 3
    assert "usage" in capsys.readouterr().err


def test_missing_file():
    assert main(["fn", "eval", "--in", "/nonexistent.json", "--x", "0,0"]) == 2


def test_invalid_input(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dim": 2, "pieces": []}')
    assert main(["fn", "eval", "--in", str(bad), "--x", "0,0"]) == 3
    bad.write_text("{not json")
    assert main(["fn", "eval", "--in", str(bad), "--x", "0,0"]) == 3


def test_fn_commands(files, capsys):
    assert main(["fn", "eval", "--in", files["v"], "--x", "0.1,0.2"]) == 0
    out = json.loads(capsys.readouterr().out)
    v = cf.fn_from_dict(read_json(files["v"]))
    assert out["value"] == cf.eval_fn(v, np.array([0.1, 0.2]))
    for argv in (["fn", "scale", "--in", files["u"], "--lam", "2"],
                 ["fn", "infconv", "--fns", files["u"] + "," + files["u"], "--weights", "1,2"],
                 ["fn", "sublevel", "--in", files["u"], "--t", "0.5"]):
        assert main(argv) == 0
    capsys.readouterr()


def test_val_commands(files, capsys):
    assert main(["val", "eval", "--zeta", files["z"], "--fn", files["u"]]) == 0
    a = json.loads(capsys.readouterr().out)["value"]
    assert main(["val", "dual-eval", "--zeta", files["z"], "--fn", files["v"], "--check"]) == 0
    b = json.loads(capsys.readouterr().out)["value"]
    assert a == pytest.approx(b, abs=1e-12)


def test_hess_csv(files, capsys):
    assert main(["hess", "verify-ps", "--fn", files["u"], "--window", files["w"], "--samples", "50000",
                 "--seed", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "s,polynomial,estimate,stderr,within_3se"
    assert len(lines) == 4
    assert main(["hess", "duality", "--fn", files["v"], "--window", files["w"]]) == 0
    rows = [r.split(",") for r in capsys.readouterr().out.strip().splitlines()[1:]]
    assert all(float(r[1]) == pytest.approx(float(r[2]), abs=1e-9) for r in rows)


def test_suite_exit_codes(tmp_path, capsys):
    out = str(tmp_path / "r.json")
    assert main(["suite", "valuation", "--cases", "5", "--seed", "2", "--out", out]) == 0
    rep = read_json(out)
    assert rep["passed"] and rep["seed"] == 2 and rep["config"]["seed"] == 2
    assert main(["suite", "valuation", "--cases", "5", "--negative-control"]) == 0
    capsys.readouterr()


def test_env_seed(monkeypatch, capsys):
    monkeypatch.setenv("EPIVAL_SEED", "11")
    assert main(["suite", "valuation", "--cases", "2", "--dims", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["seed"] == 11


def test_byte_identical(capsys):
    argv = ["suite", "inclexcl", "--cases", "2", "--seed", "4"]
    main(argv)
    a = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == a


def test_serialization_digits():
    text = dumps({"x": 0.1})
    assert "0.10000000000000001" in text
