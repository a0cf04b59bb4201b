import json
import math

import numpy as np
import pytest

from lorenz_spec import harness as H
from lorenz_spec.cli import main
from lorenz_spec.errors import InvalidParams


def test_config_roundtrip_and_hash(tmp_path):
    cfg = H.RunConfig(T_sweep=(30.0, 50.0), seed=3)
    path = tmp_path / "run.cfg"
    path.write_text(cfg.to_text())
    back = H.RunConfig.load(path)
    assert back.T_sweep == (30.0, 50.0) and back.seed == 3
    assert back.config_hash() == cfg.config_hash()
    assert H.RunConfig(seed=4).config_hash() != cfg.config_hash()


@pytest.mark.parametrize("text", ["k = 2.5\n", "eps_factor = 2\n", "mystery = 1\n", "h = abc\n", "T_sweep = \n"])
def test_bad_config_rejected(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(InvalidParams):
        H.RunConfig.load(path)
    assert main(["--config", str(path), "mixing"]) == H.EXIT_BAD_CONFIG


def test_jsonable_handles_numpy_and_nan():
    out = json.loads(H.dumps({"a": np.float64(1.5), "b": math.nan, "c": np.arange(3), "d": np.bool_(True)}))
    assert out == {"a": 1.5, "b": None, "c": [0, 1, 2], "d": True}


def test_baseline_compare():
    base = H.RegressionBaseline("abc")
    base.record("d_star", 0.02, 1e-6)
    assert base.compare({"d_star": 0.02}, "abc") == []
    assert base.compare({"d_star": 0.03}, "abc")
    assert base.compare({"d_star": 0.02}, "other")


def test_simulate_cli(tmp_path):
    assert main(["--out", str(tmp_path), "simulate", "--t-max", "30"]) == 0
    cols = H.read_csv_columns(tmp_path / "simulate" / "crossings.csv")
    assert len(cols["t"]) >= 10
    assert (tmp_path / "simulate" / "trajectory.svg").read_text().startswith("<svg")
    assert (tmp_path / "config.txt").exists()


def test_certify_gap_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["--out", str(d), "certify-gap", "--T", "50"]) == 0
    ja = (a / "certify_gap" / "gap_T50.json").read_bytes()
    assert ja == (b / "certify_gap" / "gap_T50.json").read_bytes()
    rep = json.loads(ja)
    assert rep["d_star"] > 0 and rep["clearance"] > 0
    assert (a / "certify_gap" / "gap_T50.svg").exists()


def test_mixing_cli_exit_ok(tmp_path):
    assert main(["--out", str(tmp_path), "mixing"]) == 0
    rep = json.loads((tmp_path / "mixing" / "mixing.json").read_text())
    assert rep["lorenz"]["mixing"] and not rep["rotation"]["mixing"]


def test_return_map_cli(tmp_path):
    assert main(["--out", str(tmp_path), "return-map", "--n-max", "4"]) == 0
    assert (tmp_path / "return_map" / "periodic.csv").read_text().count("\n") == 1 + 2 + 6 + 12
