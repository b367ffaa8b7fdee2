"""Acceptance suite: every criterion at its stated tolerance, one PASS/FAIL line each.

Run with ``pytest -m acceptance -s`` to see only these lines; they are also
printed (uncaptured) in a normal ``pytest -v`` run.
"""

import math
import time

import numpy as np
import pytest

from bpbkit import moduli
from bpbkit.bilinear import apply as bapply
from bpbkit.harness import ExperimentConfig, generate_instance, lemma_validation_suite, run_experiment
from bpbkit.operators import BlockOperator, operator_norm, range_norm
from bpbkit.pipelines import micro_transitive_isometry, run_pipeline
from bpbkit.spaces import COMPLEX, REAL, SpaceDesc, SumSpaceDesc, lp_norm, sample_sphere

pytestmark = pytest.mark.acceptance

ATTAIN = 1e-8


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance] criterion {number} ({title}): {'PASS' if ok else 'FAIL'} -- {detail}")
    return emit


def _operator_suite(cfg):
    """Run every (eps, trial) of an operator config; return failures and maxima."""
    fails, worst = [], {"attain": 0.0, "norm": 0.0, "map": 0.0, "point": 0.0}
    for eps in cfg.eps:
        for t in range(cfg.trials):
            inst = generate_instance(cfg, t, eps)
            if inst.skipped:
                fails.append((eps, t, "skipped: " + inst.skipped))
                continue
            try:
                cert = run_pipeline(cfg.pipeline, inst.map, inst.point, eps, cfg.get_budget())
            except Exception as exc:
                fails.append((eps, t, f"{type(exc).__name__}: {exc}"))
                continue
            S, z0, x0 = cert.corrected, cert.point, inst.point
            attain = abs(float(range_norm(S.range, S.apply(z0))) - 1)
            nrm = max(abs(cert.norm_bracket[0] - 1), abs(cert.norm_bracket[1] - 1))
            pd = float(lp_norm(z0 - x0, cfg.domain_p, axis=1).max())
            worst["attain"] = max(worst["attain"], attain)
            worst["norm"] = max(worst["norm"], nrm)
            worst["map"] = max(worst["map"], cert.map_distance[1] / eps)
            worst["point"] = max(worst["point"], pd / eps)
            ok = (attain <= ATTAIN and nrm <= ATTAIN and cert.map_distance[1] < eps and pd < eps
                  and all(s.passed for s in cert.steps))
            if cfg.pipeline == "bpb-local":
                ok = ok and z0.tobytes() == x0.tobytes() and z0.dtype == x0.dtype
            if not ok:
                fails.append((eps, t, "postcondition"))
    return fails, worst


def _bilinear_suite(cfg, local):
    fails, worst = [], {"attain": 0.0, "norm": 0.0, "map": 0.0, "point": 0.0}
    for eps in cfg.eps:
        for t in range(cfg.trials):
            inst = generate_instance(cfg, t, eps)
            if inst.skipped:
                fails.append((eps, t, "skipped: " + inst.skipped))
                continue
            try:
                cert = run_pipeline(cfg.pipeline, inst.map, inst.point, eps, cfg.get_budget())
            except Exception as exc:
                fails.append((eps, t, f"{type(exc).__name__}: {exc}"))
                continue
            (uL, uR), (xL, xR) = cert.point, inst.point
            attain = abs(abs(bapply(cert.corrected, uL, uR)) - 1)
            nrm = max(abs(cert.norm_bracket[0] - 1), abs(cert.norm_bracket[1] - 1))
            pd = max(float(lp_norm(uL - xL, 2, axis=1).max()), float(lp_norm(uR - xR, 2, axis=1).max()))
            worst["attain"] = max(worst["attain"], attain)
            worst["norm"] = max(worst["norm"], nrm)
            worst["map"] = max(worst["map"], cert.map_distance[1] / eps)
            worst["point"] = max(worst["point"], pd / eps)
            ok = (attain <= ATTAIN and nrm <= ATTAIN and cert.map_distance[1] < eps
                  and all(s.passed for s in cert.steps))
            if local:
                ok = ok and uL.tobytes() == xL.tobytes() and uR.tobytes() == xR.tobytes()
            else:
                ok = ok and pd < eps
            if not ok:
                fails.append((eps, t, "postcondition"))
    return fails, worst


def _detail(n, fails, worst, seconds):
    return (f"{n - len(fails)}/{n} certificates pass; max |attain-1| {worst['attain']:.1e}, "
            f"max |norm-1| {worst['norm']:.1e}, max dist/eps map {worst['map']:.3f} "
            f"point {worst['point']:.3f}; {seconds:.0f}s" + (f"; first failure {fails[0]}" if fails else ""))


OPERATOR_CONFIGS = {
    "real l2^2 -> real l2^3": dict(field=REAL, range_p=2.0),
    "complex l2^2 -> complex l2^3": dict(field=COMPLEX, range_p=2.0),
    "complex l2^2 -> complex l1^3": dict(field=COMPLEX, range_p=1.0),
}


@pytest.mark.parametrize("name", list(OPERATOR_CONFIGS))
def test_criterion_1_operator_suite(name, report):
    cfg = ExperimentConfig(pipeline="bpb-op", domain_p=2.0, domain_dim=2, range_dim=3, n=3,
                           eps=[0.3, 0.6], trials=200, master_seed=1, **OPERATOR_CONFIGS[name])
    t0 = time.perf_counter()
    fails, worst = _operator_suite(cfg)
    secs = time.perf_counter() - t0
    report(1, f"operator BPB, {name}", not fails and secs < 300, _detail(400, fails, worst, secs))
    assert not fails
    assert secs < 300


def test_criterion_2_operator_local_suite(report):
    cfg = ExperimentConfig(pipeline="bpb-local", field=COMPLEX, domain_dim=2, range_p=1.0,
                           range_dim=2, n=3, eps=[0.3, 0.6], trials=100, master_seed=2)
    t0 = time.perf_counter()
    fails, worst = _operator_suite(cfg)
    secs = time.perf_counter() - t0
    report(2, "operator local attainment, complex l2^2 -> complex l1^2", not fails,
           _detail(200, fails, worst, secs))
    assert not fails


def test_criterion_3_bilinear_suite(report):
    cfg = ExperimentConfig(pipeline="bpb-bilinear", field=COMPLEX, domain_dim=2, n=2, m=2,
                           eps=[0.6], trials=100, master_seed=3)
    t0 = time.perf_counter()
    fails, worst = _bilinear_suite(cfg, local=False)
    secs = time.perf_counter() - t0
    report(3, "bilinear BPB, complex l2^2, n=m=2", not fails and secs < 600,
           _detail(100, fails, worst, secs))
    assert not fails
    assert secs < 600


def test_criterion_4_bilinear_local_suite(report):
    cfg = ExperimentConfig(pipeline="bpb-bilinear-local", field=COMPLEX, domain_dim=2, n=2, m=2,
                           eps=[0.6], trials=100, master_seed=4)
    t0 = time.perf_counter()
    fails, worst = _bilinear_suite(cfg, local=True)
    secs = time.perf_counter() - t0
    report(4, "bilinear local attainment, complex l2^2, n=m=2", not fails,
           _detail(100, fails, worst, secs))
    assert not fails


def test_criterion_5_lemma_validations(report):
    rep = lemma_validation_suite(master_seed=5, series_trials=1000, tail_trials=100)
    cs, ot, bt = rep["convex_series"], rep["operator_tail"], rep["bilinear_tail"]
    ok = (cs["trials"] == 1000 and cs["failures"] == 0 and ot["trials"] == 100 and bt["trials"] == 100
          and ot["certified_counterexamples"] == 0 and bt["certified_counterexamples"] == 0)
    report(5, "support-set and tail lemmas", ok,
           f"convex series {cs['failures']} failures / {cs['trials']}; operator tail "
           f"{ot['certified_counterexamples']} counterexamples (premise held {ot['premise_held']}/100); "
           f"bilinear tail {bt['certified_counterexamples']} counterexamples "
           f"(premise held {bt['premise_held']}/100)")
    assert ok


def test_criterion_6_moduli(report):
    lines, ok = [], True
    l2 = SpaceDesc(REAL, 2, 2)
    for eps in (0.5, 1.0, 1.5):
        b = moduli.delta_convexity_bracket(l2, eps, 1e-2)
        exact = 1 - math.sqrt(1 - eps * eps / 4)
        good = b.lo <= exact <= b.hi and b.hi - b.lo <= 1e-2
        ok &= good
        lines.append(f"dX({eps}) in [{b.lo:.5f},{b.hi:.5f}]")
    for eps in (0.1, 0.3, 0.5, 0.9, 1.7):
        b = moduli.delta_complex_bracket(SpaceDesc(COMPLEX, 1.0, 1), eps)
        good = b.lo <= eps <= b.hi and abs(b.lo - eps) <= 1e-6 and abs(b.hi - eps) <= 1e-6
        ok &= good
    lines.append("dC on C contains eps within 1e-6" if ok else "dC on C off")
    b = moduli.delta_complex_bracket(SpaceDesc(COMPLEX, 1.0, 2), 0.5)
    ok &= b.lo > 0
    lines.append(f"dC(complex l1^2, 0.5) lo={b.lo:.5f}")
    report(6, "moduli brackets at resolution 1e-2", ok, "; ".join(lines))
    assert ok


def test_criterion_7_isometry_transport(report):
    r = np.random.default_rng(7)
    worst_map, worst_norm = 0.0, 0.0
    for k in range(1000):
        dim = int(r.integers(1, 5))
        field = COMPLEX if k % 2 else REAL
        sp = SpaceDesc(field, 2, dim)
        x, y = sample_sphere(sp, r, 2)
        if k % 10 == 3:    # nearly equal
            y = x + 1e-9 * y
            y /= np.linalg.norm(y)
        elif k % 10 == 7:  # antipodal or a unimodular multiple
            y = -x if field == REAL else np.exp(2j * np.pi * r.random()) * x
        U = micro_transitive_isometry(x, y, sp).matrix
        worst_map = max(worst_map, float(np.abs(U @ x - y).max()))
        base = SpaceDesc(COMPLEX if np.iscomplexobj(U) else REAL, 2, dim)
        D = BlockOperator(SumSpaceDesc(base, 1), base, (U - np.eye(dim))[None])
        w = operator_norm(D)
        dist = float(np.linalg.norm(x - y))
        worst_norm = max(worst_norm, abs(w.lo - dist), abs(w.hi - dist))
    ok = worst_map <= 1e-12 and worst_norm <= 1e-8
    report(7, "isometry transport on 1000 Hilbert pairs", ok,
           f"max |Ux-y| {worst_map:.1e} (float64 tolerance 1e-12); max | ||U-I|| - ||x-y|| | {worst_norm:.1e}")
    assert ok


def _csv_without_millis(text):
    return "\n".join(line.rsplit(",", 1)[0] for line in text.splitlines()).encode()


def test_criterion_8_reproducible_csv(report):
    cfgs = [ExperimentConfig(pipeline="bpb-bilinear", field=COMPLEX, domain_dim=2, n=2, m=2,
                             eps=[0.6], trials=100, master_seed=3),
            ExperimentConfig(pipeline="bpb-local", field=COMPLEX, domain_dim=2, range_p=1.0,
                             range_dim=2, n=3, eps=[0.3, 0.6], trials=100, master_seed=2)]
    same = []
    for cfg in cfgs:
        a, b = run_experiment(cfg), run_experiment(cfg)
        same.append(_csv_without_millis(a["csv"]) == _csv_without_millis(b["csv"])
                    and a["summary"]["pass_rate"] == 1.0)
    ok = all(same)
    report(8, "reproducible CSV across reruns", ok,
           f"{sum(same)}/{len(same)} suites byte-identical (wall-time column excluded) and fully passing")
    assert ok
