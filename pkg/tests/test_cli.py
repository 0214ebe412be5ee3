import json
import os

import pytest

from bolab.cli import apply_overrides, config_hash, load_config, main
from bolab.errors import ConfigError


def test_missing_config_exits_2(tmp_path, capsys):
    code = main(["evolve", "--config", str(tmp_path / "nope.json"),
                 "--output-dir", str(tmp_path)])
    assert code == 2
    assert "not found" in capsys.readouterr().err


def test_invalid_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code = main(["measure-decay", "--config", str(bad), "--output-dir", str(tmp_path)])
    assert code == 2


def test_unknown_config_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_points": 512, "box_length": 200.0, "mystery": 1}))
    code = main(["measure-decay", "--config", str(cfg), "--output-dir", str(tmp_path)])
    assert code == 2
    assert "mystery" in capsys.readouterr().err


def test_override_parsing():
    cfg = {"a": 1, "nested": {"b": 2}}
    out = apply_overrides(cfg, ["a=5", "nested.b=[1,2]", "nested.c=hello"])
    assert out["a"] == 5
    assert out["nested"]["b"] == [1, 2]
    assert out["nested"]["c"] == "hello"
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["novalue"])


def test_config_round_trip(tmp_path):
    payload = {"n_points": 512, "box_length": 200.0, "t_final": 0.1}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(payload))
    loaded = load_config(str(path), {})
    assert json.loads(json.dumps(loaded, sort_keys=True)) == payload


def test_verify_normal_form_pass_and_manifest(tmp_path):
    out = tmp_path / "nf"
    code = main([
        "verify-normal-form", "--output-dir", str(out),
        "--override", "n_points=256",
        "--override", "trials_per_case=1",
        "--override", "bands=[1,2]",
        "--override", "orders=[2]",
    ])
    assert code == 0
    table = (out / "normal_form_residuals.csv").read_text().strip().split("\n")
    assert table[0] == "k,N,trial,residual,scale,relative,pass"
    assert len(table) == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "verify-normal-form"
    assert "normal_form_residuals.csv" in manifest["outputs"]


def test_verify_normal_form_fault_injection_exits_3(tmp_path, capsys):
    code = main([
        "verify-normal-form", "--output-dir", str(tmp_path / "bug"),
        "--override", "n_points=256",
        "--override", "trials_per_case=1",
        "--override", "bands=[1]",
        "--override", "orders=[4]",
        "--inject-symbol-bug",
    ])
    assert code == 3
    assert "residual" in capsys.readouterr().err


def test_manifest_determinism(tmp_path):
    hashes = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main([
            "verify-normal-form", "--output-dir", str(out),
            "--override", "n_points=256",
            "--override", "trials_per_case=1",
            "--override", "bands=[1]",
            "--override", "orders=[2]",
        ])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        hashes.append((manifest["config_hash"], manifest["outputs"]))
    assert hashes[0] == hashes[1]


def test_evolve_and_report_pipeline(tmp_path):
    cfg = {
        "n_points": 512,
        "box_length": 200.0,
        "t_final": 0.05,
        "dt": 0.01,
        "snapshot_stride": 5,
        "shells": [2.0, 2.5, 3.0, 3.5, 4.0],
        "seed": 1,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))

    out_e = tmp_path / "evolve"
    assert main(["evolve", "--config", str(cfg_path), "--output-dir", str(out_e)]) == 0
    snaps = sorted(p for p in os.listdir(out_e) if p.endswith(".bosnap"))
    assert len(snaps) == 2  # t = 0 and t = 0.05
    assert (out_e / "ledger.csv").exists()

    out_m = tmp_path / "measure"
    assert main(["measure-decay", "--config", str(cfg_path), "--output-dir", str(out_m)]) == 0
    assert (out_m / "decay_report.json").exists()

    out_r = tmp_path / "report"
    code = main([
        "report", "--input", str(out_m / "decay_report.json"),
        "--output-dir", str(out_r),
    ])
    assert code == 0
    assert (out_r / "decay_report.csv").exists()


def test_report_missing_input_exits_2(tmp_path):
    assert main(["report", "--output-dir", str(tmp_path)]) == 2


def test_config_hash_key_order_invariant():
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
