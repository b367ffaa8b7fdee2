import json

import numpy as np
import pytest

from bpbkit.harness import (CSV_COLUMNS, PRNG, ExperimentConfig, eta_tightness_search,
                            generate_instance, instance_from_dict, lemma_validation_suite,
                            run_experiment, run_trial, trial_seed, write_report)
from bpbkit.operators import Budget, operator_norm
from bpbkit.spaces import COMPLEX, lp_norm

FAST = {"starts": 8, "grid_points": 20_000}
# complex l_2^2 blocks into C: at eps = 0.9 the premise band eta^6/64 is about 5e-12
RESOLVABLE = dict(pipeline="bpb-op", field=COMPLEX, range_p=2.0, range_dim=1, n=2, eps=[0.9])


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(eps=[1.0])
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(pipeline="bpb-other")
    cfg = ExperimentConfig(range_p=float("inf"))
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


def test_trial_seeds():
    assert trial_seed(0, 1) == trial_seed(0, 1)
    assert len({trial_seed(0, t) for t in range(100)}) == 100
    assert trial_seed(1, 0) != trial_seed(0, 0)


def test_generate_deterministic():
    cfg = ExperimentConfig(range_p=1.0, budget=FAST)
    a = generate_instance(cfg, 3)
    b = generate_instance(cfg, 3)
    assert a.to_dict() == b.to_dict()
    M, x = instance_from_dict(json.loads(json.dumps(a.to_dict())))
    assert np.array_equal(M.blocks, a.map.blocks) and np.array_equal(x, a.point)


def test_margin_zero_returns_witness():
    cfg = ExperimentConfig(**RESOLVABLE, budget=FAST)
    at = generate_instance(cfg, 0, margin_fraction=0.0)
    inside = generate_instance(cfg, 0, margin_fraction=0.5)
    assert at.band > 1e-12
    assert abs(at.margin) <= 1e-15
    assert inside.margin == pytest.approx(0.5 * inside.band, rel=1e-3)
    assert not np.array_equal(at.point, inside.point)


def test_generated_operator_premise_holds():
    cfg = ExperimentConfig(range_p=1.0, range_dim=3, n=3, eps=[0.5], budget=FAST)
    for t in range(100):
        inst = generate_instance(cfg, t)
        assert inst.skipped is None
        lo = operator_norm(inst.map, Budget(starts=8, certify=False)).lo
        value = float(lp_norm(inst.map.apply(inst.point), 1.0)) / lo
        assert 1 - value < max(inst.band, 1e-14)
        assert inst.band == inst.param ** 6 / 64


def test_trivial_attaining_single_row():
    cfg = ExperimentConfig(pipeline="bpb-op", field=COMPLEX, domain_dim=1, range_dim=1, n=1,
                           trials=1, eps=[0.5], budget=FAST)
    rep = run_experiment(cfg)
    assert rep["summary"]["by_status"] == {"pass": 1}
    assert rep["prng"] == PRNG
    assert rep["csv"].splitlines()[0] == ",".join(CSV_COLUMNS)
    assert len(rep["csv"].splitlines()) == 2


def test_fault_hook_flags_breach():
    cfg = ExperimentConfig(range_p=1.0, trials=2, eps=[0.5], budget=FAST, fault_step="midpoint")
    rep = run_experiment(cfg)
    assert rep["summary"]["by_status"] == {"breach": 2}
    assert all(r["failed_step"] == "midpoint" for r in rep["records"])
    rec = run_trial(ExperimentConfig(range_p=1.0, eps=[0.5], budget=FAST), 0, 0.5,
                    fault=lambda step: step == "support A")
    assert rec.status == "breach" and rec.failed_step == "support A"


def _without_millis(csv_text):
    return [line.rsplit(",", 1)[0] for line in csv_text.splitlines()]


def test_csv_reproducible(tmp_path):
    cfg = ExperimentConfig(pipeline="bpb-bilinear", n=2, m=2, trials=3, eps=[0.6], budget=FAST)
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    assert CSV_COLUMNS[-1] == "millis"
    assert _without_millis(a["csv"]) == _without_millis(b["csv"])
    assert a["summary"] == b["summary"]
    write_report(a, str(tmp_path / "run"))
    assert (tmp_path / "run.csv").read_text() == a["csv"]
    body = json.loads((tmp_path / "run.json").read_text())
    assert "csv" not in body and body["summary"]["passed"] == 3


def test_skipped_rows_are_reported():
    # an l_inf range has no positive C-modulus, so every trial is skipped with a reason
    cfg = ExperimentConfig(range_p=float("inf"), trials=2, eps=[0.5], budget=FAST)
    rep = run_experiment(cfg)
    assert rep["summary"]["by_status"] == {"skipped": 2}
    assert all(r["detail"] for r in rep["records"])


def test_eta_search_degenerate_scalar():
    cfg = ExperimentConfig(pipeline="bpb-op", field=COMPLEX, domain_dim=1, range_dim=1, n=1,
                           trials=2, eps=[0.5], budget=FAST)
    rep = eta_tightness_search(cfg, directions=2)
    assert rep["label"] == "heuristic"
    for row in rep["trials"]:
        assert row["feasible_margin"] == 0.5  # the largest margin on the grid


def test_eta_search_at_least_band_and_deterministic():
    cfg = ExperimentConfig(**{**RESOLVABLE, "eps": [0.95]}, trials=2, budget=FAST)
    a = eta_tightness_search(cfg, directions=2)
    b = eta_tightness_search(cfg, directions=2)
    a.pop("timestamp"), b.pop("timestamp")
    assert a == b
    assert a["min_feasible_margin"] >= a["band"]
    with pytest.raises(ValueError):
        eta_tightness_search(ExperimentConfig(pipeline="bpb-bilinear"))


def test_lemma_suite_small():
    rep = lemma_validation_suite(0, series_trials=50, tail_trials=4, budget=Budget(starts=8, grid_points=20_000))
    assert rep["failures"] == 0
    assert rep["convex_series"]["trials"] == 50
    assert rep["operator_tail"]["trials"] == 4
