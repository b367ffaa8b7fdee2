import json
import subprocess
import sys

import numpy as np
import pytest

from bpbkit.cli import main

FAST = {"starts": 8, "grid_points": 20_000}


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def op_config(tmp_path):
    return _write(tmp_path / "cfg.json", {"pipeline": "bpb-op", "range_p": 1.0, "trials": 2,
                                          "eps": [0.5], "budget": FAST})


def test_generate_and_correct(tmp_path, op_config):
    inst = str(tmp_path / "inst.json")
    assert main(["generate", "--config", op_config, "--trial", "1", "--out", inst]) == 0
    out = str(tmp_path / "cert.json")
    assert main(["bpb-op", "--instance", inst, "--budget", json.dumps(FAST), "--out", out]) == 0
    cert = json.loads(open(out).read())
    assert cert["status"] == "ok" and cert["map_distance"]["hi"] < 0.5
    assert all(s["passed"] for s in cert["steps"])


def test_premise_violation_exit_code(tmp_path, op_config):
    inst = tmp_path / "inst.json"
    main(["generate", "--config", op_config, "--out", str(inst)])
    d = json.loads(inst.read_text())
    x = np.array(d["point"])              # (n, dim, 2) real/imag pairs
    x[:, :, 1] = 0.0
    x[:, 0, 0], x[:, 1, 0] = 1.0, 0.0     # a point far from the norm witness
    d["point"] = x.tolist()
    inst.write_text(json.dumps(d))
    assert main(["bpb-op", "--instance", str(inst), "--out", str(tmp_path / "c.json")]) == 2
    assert main(["bpb-op", "--instance", str(inst), "--eps", "1.5",
                 "--out", str(tmp_path / "c.json")]) == 2


def test_experiment_outputs(tmp_path, op_config):
    prefix = str(tmp_path / "exp")
    assert main(["experiment", "--config", op_config, "--out", prefix]) == 0
    rows = open(prefix + ".csv").read().splitlines()
    assert rows[0].startswith("trial,seed,eps,eta") and len(rows) == 3


def test_experiment_breach_exit_code(tmp_path):
    cfg = _write(tmp_path / "cfg.json", {"pipeline": "bpb-op", "range_p": 1.0, "trials": 1,
                                         "eps": [0.5], "budget": FAST, "fault_step": "assemble"})
    assert main(["experiment", "--config", cfg]) == 3


def test_moduli_subcommand(tmp_path):
    out = tmp_path / "m.json"
    assert main(["moduli", "--space", "real,2,2", "--eps", "0.5", "1.0", "--out", str(out)]) == 0
    rows = json.loads(out.read_text())["brackets"]
    assert len(rows) == 2 and all(r["lo"] <= r["hi"] for r in rows)
    assert main(["moduli", "--kind", "complex", "--field", "complex", "--p", "1", "--dim", "1",
                 "--eps", "0.3", "--out", str(out)]) == 0
    b = json.loads(out.read_text())["brackets"][0]
    assert b["lo"] <= 0.3 <= b["hi"]


def test_validate_and_eta_search(tmp_path):
    out = tmp_path / "v.json"
    assert main(["validate-lemmas", "--series-trials", "20", "--tail-trials", "2",
                 "--out", str(out)]) == 0
    assert json.loads(out.read_text())["failures"] == 0
    cfg = _write(tmp_path / "s.json", {"pipeline": "bpb-op", "field": "complex", "domain_dim": 1,
                                       "range_dim": 1, "n": 1, "trials": 1, "eps": [0.5],
                                       "budget": FAST})
    assert main(["eta-search", "--config", cfg, "--out", str(out)]) == 0
    assert json.loads(out.read_text())["label"] == "heuristic"


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "bpbkit.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "bpb-bilinear-local" in out.stdout
