"""Seeded experiments: instance generation, batch runs, lemma checks, eta search.

Per-trial randomness comes from ``PCG64`` seeded by
``SeedSequence([master_seed, trial])``; identical configs give identical
reports apart from the ``timestamp`` field and the ``millis`` column.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field as dc_field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import moduli
from .bilinear import BlockBilinear, apply as bapply, bilinear_norm, bilinear_tail_check
from .operators import (BlockOperator, Budget, convex_series_support, crude_bound,
                        operator_norm, range_norm, tail_bound_check, upper_bound)
from .pipelines import (ContractBreach, PremiseViolation, Tolerances, premise_band,
                        run_pipeline)
from .spaces import (COMPLEX, REAL, SpaceDesc, SumSpaceDesc, decode_scalars, encode_scalars,
                     gaussian, lp_norm, norming_functional)

PRNG = "numpy PCG64 seeded by SeedSequence([master_seed, trial])"
PIPELINE_IDS = ("bpb-op", "bpb-local", "bpb-bilinear", "bpb-bilinear-local")
CSV_COLUMNS = ("trial", "seed", "eps", "eta", "premise_margin", "attain_residual",
               "map_distance_hi", "point_distance", "status", "millis")


@dataclass
class ExperimentConfig:
    pipeline: str = "bpb-op"
    field: str = COMPLEX
    domain_p: float = 2.0
    domain_dim: int = 2
    range_p: float = 2.0
    range_dim: int = 3
    n: int = 3
    m: int = 2
    eps: list = dc_field(default_factory=lambda: [0.3, 0.6])
    trials: int = 10
    master_seed: int = 0
    budget: dict = dc_field(default_factory=dict)
    tolerances: dict = dc_field(default_factory=dict)
    margin_fraction: float = 0.5
    fault_step: str | None = None

    def __post_init__(self):
        if self.pipeline not in PIPELINE_IDS:
            raise ValueError(f"unknown pipeline {self.pipeline!r}")
        if self.field not in (REAL, COMPLEX):
            raise ValueError(f"unknown field {self.field!r}")
        if int(self.trials) < 1:
            raise ValueError("trials must be >= 1")
        self.eps = [float(e) for e in self.eps]
        if not all(0 < e < 1 for e in self.eps):
            raise ValueError("every eps must lie in (0, 1)")
        if not 0 <= self.margin_fraction < 1:
            raise ValueError("margin_fraction must lie in [0, 1)")
        self.domain_p = float(self.domain_p)
        self.range_p = float(self.range_p)

    @property
    def bilinear(self) -> bool:
        return self.pipeline.startswith("bpb-bilinear")

    def get_budget(self) -> Budget:
        return Budget.from_dict(self.budget) if self.budget else Budget()

    def get_tolerances(self) -> Tolerances:
        return Tolerances(**self.tolerances)

    def spaces(self):
        base = SpaceDesc(self.field, self.domain_p, self.domain_dim)
        left = SumSpaceDesc(base, self.n)
        if self.bilinear:
            return left, SumSpaceDesc(base, self.m)
        return left, SpaceDesc(self.field, self.range_p, self.range_dim)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("domain_p", "range_p"):
            d[k] = "inf" if math.isinf(d[k]) else d[k]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        for k in ("domain_p", "range_p"):
            if k in d:
                d[k] = float(d[k])
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(s))


def trial_seed(master_seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([master_seed, trial]).generate_state(1, np.uint64)[0])


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, trial])))


# -- instances ---------------------------------------------------------------------


@dataclass
class Instance:
    pipeline: str
    map: object
    point: object           # x0, or (xL, xR)
    eps: float
    seed: int
    param: float            # eta or gamma
    band: float
    margin: float
    skipped: str | None = None

    def to_dict(self) -> dict:
        f = self.map.field
        if isinstance(self.point, tuple):
            pt = {"left": encode_scalars(self.point[0], f), "right": encode_scalars(self.point[1], f)}
        else:
            pt = encode_scalars(self.point, f)
        return {"pipeline": self.pipeline, "kind": "bilinear" if isinstance(self.map, BlockBilinear)
                else "operator", "map": self.map.to_dict(), "point": pt, "eps": self.eps,
                "seed": self.seed, "param": self.param, "band": self.band, "margin": self.margin}


def instance_from_dict(d: dict) -> tuple[object, object]:
    """``(map, point)`` from an instance file; the point may be a pair."""
    if d.get("kind") == "bilinear" or "kernels" in d.get("map", {}):
        B = BlockBilinear.from_dict(d["map"])
        return B, (decode_scalars(d["point"]["left"], B.field), decode_scalars(d["point"]["right"], B.field))
    T = BlockOperator.from_dict(d["map"])
    return T, decode_scalars(d["point"], T.field)


def _value(M, point) -> float:
    if isinstance(M, BlockBilinear):
        return float(abs(bapply(M, point[0], point[1])))
    return float(range_norm(M.range, M.apply(point)))


def _unit_rows(x, p):
    return x / lp_norm(x, p, axis=1)[:, None]


def _perturb(M, point, dirs, t, p):
    if isinstance(point, tuple):
        return (_unit_rows(point[0] + t * dirs[0], p), _unit_rows(point[1] + t * dirs[1], p))
    return _unit_rows(point + t * dirs, p)


def place_in_band(M, witness, dirs, target: float, p: float, iters: int = 80):
    """Move along ``dirs`` until ``1 - value`` reaches ``target`` (bisection in t)."""
    if target <= 0:
        return witness
    lo, hi = 0.0, 1.0
    while 1 - _value(M, _perturb(M, witness, dirs, hi, p)) <= target:
        if hi > 1e6:
            return witness  # the margin cannot be pushed that far along this direction
        lo, hi = hi, 4 * hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if 1 - _value(M, _perturb(M, witness, dirs, mid, p)) <= target:
            lo = mid
        else:
            hi = mid
    return _perturb(M, witness, dirs, lo, p)


def generate_instance(config: ExperimentConfig, trial: int, eps: float | None = None,
                      margin_fraction: float | None = None) -> Instance:
    """A unit-norm map and point(s) with premise margin inside the pipeline's band.

    The map is Gaussian, normalized by the oracle's lower bound; the point is
    the oracle witness (times a random unimodular scalar), moved along a random
    block-tangent direction until the margin reaches ``margin_fraction`` of the
    band.  Bands below float64 resolution leave the witness in place.
    """
    eps = config.eps[0] if eps is None else float(eps)
    frac = config.margin_fraction if margin_fraction is None else margin_fraction
    rng = trial_rng(config.master_seed, trial)
    seed = trial_seed(config.master_seed, trial)
    left, right = config.spaces()
    budget = Budget.from_dict({**config.get_budget().to_dict(), "certify": False})
    p = config.domain_p
    f = config.field
    if config.bilinear:
        M = BlockBilinear(left, right, gaussian(rng, (config.n, config.m, config.domain_dim,
                                                      config.domain_dim), f))
        M = M.with_kernels(M.kernels / bilinear_norm(M, budget).lo)
        w = bilinear_norm(M, budget)
        ph = np.exp(2j * np.pi * rng.random()) if f == COMPLEX else 1.0
        witness = (w.left * ph, w.right)
        dirs = (gaussian(rng, w.left.shape, f), gaussian(rng, w.right.shape, f))
        xl, xr = witness
    else:
        M = BlockOperator(left, right, gaussian(rng, (config.n, config.range_dim, config.domain_dim), f))
        M = M.with_blocks(M.blocks / operator_norm(M, budget).lo)
        w = operator_norm(M, budget)
        ph = np.exp(2j * np.pi * rng.random()) if f == COMPLEX else (1.0 if rng.random() < 0.5 else -1.0)
        witness = w.witness * ph
        dirs = gaussian(rng, w.witness.shape, f)
        xl, xr = witness, None
    tol = config.get_tolerances()
    try:
        param, band = premise_band(config.pipeline, M, eps, xl, xr)
    except (PremiseViolation, ValueError) as exc:
        return Instance(config.pipeline, M, witness, eps, seed, float("nan"), float("nan"),
                        1 - _value(M, witness), skipped=str(exc))
    point = witness
    if band >= tol.premise_floor and frac > 0:
        point = place_in_band(M, witness, dirs, frac * band, p)
    margin = 1 - _value(M, point)
    skipped = None
    if not margin < max(band, tol.premise_floor):
        skipped = f"oracle could not place the point inside the premise band (margin {margin:.3e})"
    return Instance(config.pipeline, M, point, eps, seed, float(param), float(band), float(margin),
                    skipped)


# -- batch runs ----------------------------------------------------------------------


@dataclass
class TrialRecord:
    trial: int
    seed: int
    eps: float
    eta: float
    premise_margin: float
    attain_residual: float
    map_distance_hi: float
    point_distance: float
    status: str
    millis: float
    steps_passed: int = 0
    steps_total: int = 0
    failed_step: str | None = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return asdict(self)


def run_trial(config: ExperimentConfig, trial: int, eps: float,
              fault: Callable[[str], bool] | None = None) -> TrialRecord:
    """Generate one instance and run its pipeline; every failure becomes a status."""
    t0 = time.perf_counter()
    nan = float("nan")
    seed = trial_seed(config.master_seed, trial)
    try:
        inst = generate_instance(config, trial, eps)
    except Exception as exc:  # the batch never aborts
        return TrialRecord(trial, seed, eps, nan, nan, nan, nan, nan, "error",
                           (time.perf_counter() - t0) * 1e3, detail=f"{type(exc).__name__}: {exc}")
    base = dict(trial=trial, seed=seed, eps=eps, eta=inst.param, premise_margin=inst.margin)
    if inst.skipped:
        return TrialRecord(**base, attain_residual=nan, map_distance_hi=nan, point_distance=nan,
                           status="skipped", millis=(time.perf_counter() - t0) * 1e3,
                           detail=inst.skipped)
    if fault is None and config.fault_step:
        fault = lambda step: step == config.fault_step  # noqa: E731
    try:
        cert = run_pipeline(config.pipeline, inst.map, inst.point, eps, config.get_budget(),
                            config.get_tolerances(), fault=fault)
    except PremiseViolation as exc:
        return TrialRecord(**base, attain_residual=nan, map_distance_hi=nan, point_distance=nan,
                           status="premise-violated", millis=(time.perf_counter() - t0) * 1e3,
                           detail=str(exc))
    except ContractBreach as exc:
        return TrialRecord(**base, attain_residual=nan, map_distance_hi=nan, point_distance=nan,
                           status="breach", millis=(time.perf_counter() - t0) * 1e3,
                           failed_step=exc.step, detail=str(exc))
    except Exception as exc:
        return TrialRecord(**base, attain_residual=nan, map_distance_hi=nan, point_distance=nan,
                           status="error", millis=(time.perf_counter() - t0) * 1e3,
                           detail=f"{type(exc).__name__}: {exc}")
    npass = sum(s.passed for s in cert.steps)
    return TrialRecord(**base, attain_residual=cert.attain_residual,
                       map_distance_hi=float(cert.map_distance[1]),
                       point_distance=cert.point_distance,
                       status="pass" if cert.passed else "breach",
                       millis=(time.perf_counter() - t0) * 1e3,
                       steps_passed=npass, steps_total=len(cert.steps))


def _fmt(v) -> str:
    if isinstance(v, float):
        return "%.17g" % v
    return "" if v is None else str(v)


def records_to_csv(records, include_millis: bool = True) -> str:
    cols = CSV_COLUMNS if include_millis else CSV_COLUMNS[:-1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        d = r.to_dict()
        w.writerow([_fmt(d[c]) for c in cols])
    return buf.getvalue()


def _finite(vals):
    v = [x for x in vals if isinstance(x, float) and math.isfinite(x)]
    return max(v) if v else None


def run_experiment(config: ExperimentConfig, fault: Callable[[str], bool] | None = None,
                   workers: int = 1) -> dict:
    """Run every (eps, trial) pair; the report's ``records`` are sorted by (eps, trial)."""
    jobs = [(eps, t) for eps in config.eps for t in range(config.trials)]
    if workers > 1 and fault is None:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as ex:
            records = list(ex.map(run_trial, itertools.repeat(config), [t for _, t in jobs],
                                  [e for e, _ in jobs]))
    else:
        records = [run_trial(config, t, e, fault) for e, t in jobs]
    by_status: dict = {}
    for r in records:
        by_status[r.status] = by_status.get(r.status, 0) + 1
    per_eps = {}
    for eps in config.eps:
        rs = [r for r in records if r.eps == eps]
        per_eps[repr(eps)] = {
            "trials": len(rs), "passed": sum(r.passed for r in rs),
            "max_attain_residual": _finite([r.attain_residual for r in rs]),
            "max_map_distance_hi": _finite([r.map_distance_hi for r in rs]),
            "max_point_distance": _finite([r.point_distance for r in rs]),
            "map_distance_hi": [r.map_distance_hi for r in rs],
        }
    return {
        "config": config.to_dict(), "prng": PRNG,
        "summary": {"trials": len(records), "passed": sum(r.passed for r in records),
                    "pass_rate": sum(r.passed for r in records) / len(records),
                    "by_status": dict(sorted(by_status.items())), "per_eps": per_eps},
        "records": [r.to_dict() for r in records],
        "csv": records_to_csv(records),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }


def write_report(report: dict, prefix: str):
    """``<prefix>.json`` (without the CSV text) and ``<prefix>.csv``."""
    body = {k: v for k, v in report.items() if k != "csv"}
    with open(prefix + ".json", "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True, default=_json_default)
    if "csv" in report:
        with open(prefix + ".csv", "w") as fh:
            fh.write(report["csv"])


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o)}")


# -- eta tightness search -----------------------------------------------------------


def _correctable(M, x0, eps: float, budget: Budget, tries: int = 6) -> bool:
    """Heuristic search for a norm-attaining (S, z0) within eps of (T, x0).

    Candidates: S = T at the maximizer reached by ascent from x0, then
    ``S = T + t (T x0 / ||T x0||) (x) J(x0)/n`` for a few t, renormalized.  A
    candidate counts only if its point matches the multistart norm.
    """
    p = M.domain.base.p
    local = Budget.from_dict({**budget.to_dict(), "starts": 0})

    def attains_near(S) -> tuple[bool, float]:
        g = operator_norm(S, budget).lo
        w = operator_norm(S, local, starts=x0[None])  # the maximizer reached from x0
        ok = (w.lo >= g * (1 - 1e-12)
              and float(lp_norm(w.witness - x0, p, axis=1).max()) < eps)
        return ok, max(g, w.lo)

    if attains_near(M)[0]:
        return True
    v = M.apply(x0)
    nv = float(range_norm(M.range, v))
    J = np.array([norming_functional(M.domain.base, b) for b in _unit_rows(x0, p)]) / M.n
    for t in np.linspace(eps / tries, eps, tries):
        S = M.with_blocks(M.blocks + t * np.einsum("m,nd->nmd", v / nv, J))
        ok, g = attains_near(S)
        S = S.with_blocks(S.blocks / g)
        if ok and crude_bound(S - M) < eps:
            return True
    return False


def eta_tightness_search(config: ExperimentConfig, eps: float | None = None,
                         margins: list | None = None, directions: int = 4) -> dict:
    """Empirical margin up to which every sampled instance could still be corrected.

    For each trial, margins grow geometrically from the pipeline's premise band
    to 1; at each margin a few directions are tried (keeping the hardest one,
    coordinate-ascent style).  The reported feasible margin is the last grid
    value before the first failure.  Results are heuristic lower estimates of
    the best possible eta, to be compared with the schedule's band.
    """
    if config.bilinear:
        raise ValueError("the tightness search covers operator pipelines")
    eps = config.eps[0] if eps is None else float(eps)
    budget = Budget.from_dict({**config.get_budget().to_dict(), "certify": False,
                               "starts": min(8, config.get_budget().starts)})
    rows = []
    for trial in range(config.trials):
        inst = generate_instance(config, trial, eps, margin_fraction=0.0)
        rng = trial_rng(config.master_seed, 10 ** 6 + trial)
        band = inst.band if math.isfinite(inst.band) else 0.0
        grid = margins or list(np.geomspace(max(band, 1e-14), 0.5, 24))
        p = config.domain_p
        feasible, achieved_max, hardest = grid[-1], 0.0, None
        for mg in grid:
            failed = False
            cand = ([hardest] if hardest is not None else []) + [
                gaussian(rng, inst.point.shape, config.field) for _ in range(directions)]
            for d in cand:
                x0 = place_in_band(inst.map, inst.point, d, mg, p)
                got = 1 - _value(inst.map, x0)
                achieved_max = max(achieved_max, got)
                if got <= 0 or got > mg * (1 + 1e-9):
                    continue
                if not _correctable(inst.map, x0, eps, budget):
                    failed, hardest = True, d
                    break
            if failed:
                prev = [g for g in grid if g < mg]
                feasible = prev[-1] if prev else 0.0
                break
        rows.append({"trial": trial, "seed": inst.seed, "band": inst.band, "param": inst.param,
                     "feasible_margin": float(feasible), "max_achieved_margin": float(achieved_max),
                     "gap_ratio": float(feasible / inst.band) if inst.band and inst.band > 0 else None})
    return {"config": config.to_dict(), "eps": eps, "prng": PRNG, "label": "heuristic",
            "trials": rows,
            "min_feasible_margin": min(r["feasible_margin"] for r in rows),
            "band": rows[0]["band"],
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S")}


# -- lemma validation ------------------------------------------------------------------


def _random_fraction(rng, denom: int = 997) -> Fraction:
    return Fraction(int(rng.integers(0, denom + 1)), denom)


def convex_series_trial(rng) -> dict:
    """One exact check of the convex-series support bound, plus brute force."""
    k = int(rng.integers(1, 7))
    raw = [Fraction(int(rng.integers(1, 100))) for _ in range(k)]
    scale = Fraction(int(rng.integers(90, 101)), 100) / sum(raw)
    alphas = [a * scale for a in raw]
    zs = [1 - _random_fraction(rng) * Fraction(int(rng.integers(1, 5)), 4) for _ in range(k)]
    zs = [max(z, Fraction(-1)) for z in zs]
    s = sum(a * z for a, z in zip(alphas, zs))
    eta = (1 - s) + _random_fraction(rng) / 10 + Fraction(1, 10 ** 6)
    eta_p = Fraction(int(rng.integers(1, 1000)), 1000)
    A = convex_series_support(alphas, zs, eta, eta_p)
    brute = max((S for r in range(k + 1) for S in itertools.combinations(range(k), r)
                 if all(zs[i] > 1 - eta_p for i in S)), key=len)
    mass = sum(alphas[i] for i in A)
    ok = tuple(A) == tuple(brute) and mass > 1 - eta / eta_p
    return {"k": k, "passed": bool(ok)}


def _with_small_tail(rng, blocks, A, axis_mask):
    scale = 10 ** rng.uniform(-5, -2)
    out = blocks.copy()
    out[axis_mask] *= scale
    return out


def operator_tail_trial(rng, eps: float, budget: Budget) -> dict:
    """Tail lemma on l_inf^3(l_2^2) -> complex l_1^3 with a shrunken tail."""
    dom = SumSpaceDesc(SpaceDesc(COMPLEX, 2.0, 2), 3)
    rng_space = SpaceDesc(COMPLEX, 1.0, 3)
    A = tuple(sorted(rng.choice(3, size=int(rng.integers(1, 3)), replace=False).tolist()))
    blocks = gaussian(rng, (3, 3, 2), COMPLEX)
    mask = np.array([i not in A for i in range(3)])
    blocks = _with_small_tail(rng, blocks, A, mask)
    T = BlockOperator(dom, rng_space, blocks)
    hi, _ = upper_bound(T, budget)
    T = T.with_blocks(T.blocks / hi)
    rep = tail_bound_check(T, A, eps, moduli.delta_c_lower(rng_space), budget)
    return {"A": list(A), "premise": rep.premise_holds, "verified": rep.conclusion_verified,
            "counterexample": rep.counterexample}


def bilinear_tail_trial(rng, eps: float, budget: Budget) -> dict:
    """Bilinear tail lemma on l_inf^2(complex l_2^2) with a shrunken tail."""
    X = SumSpaceDesc(SpaceDesc(COMPLEX, 2.0, 2), 2)
    AL = tuple(sorted(rng.choice(2, size=int(rng.integers(1, 3)), replace=False).tolist()))
    AR = tuple(sorted(rng.choice(2, size=int(rng.integers(1, 3)), replace=False).tolist()))
    K = gaussian(rng, (2, 2, 2, 2), COMPLEX)
    mask = np.ones((2, 2), dtype=bool)
    mask[np.ix_(list(AL), list(AR))] = False
    K = _with_small_tail(rng, K, None, mask)
    B = BlockBilinear(X, X, K)
    B = B.with_kernels(B.kernels / bilinear_norm(B, budget).hi)
    dual_sum = SumSpaceDesc(X.base.dual, 2, 1.0)
    rep = bilinear_tail_check(B, AL, AR, eps, moduli.delta_c_lower(dual_sum), budget)
    return {"A_L": list(AL), "A_R": list(AR), "premise": rep.premise_holds,
            "verified": rep.conclusion_verified, "counterexample": rep.counterexample}


def lemma_validation_suite(master_seed: int = 0, series_trials: int = 1000,
                           tail_trials: int = 100, eps: float = 0.5,
                           budget: Budget | None = None) -> dict:
    """Exact convex-series checks and the two tail lemmas with bracketed delta_C."""
    budget = budget or Budget(starts=12, grid_points=60_000)
    series = [convex_series_trial(trial_rng(master_seed, t)) for t in range(series_trials)]
    op = [operator_tail_trial(trial_rng(master_seed + 1, t), eps, budget) for t in range(tail_trials)]
    bil = [bilinear_tail_trial(trial_rng(master_seed + 2, t), eps, budget) for t in range(tail_trials)]

    def summary(rows):
        return {"trials": len(rows), "premise_held": sum(r["premise"] for r in rows),
                "verified": sum(r["verified"] for r in rows),
                "certified_counterexamples": sum(r["counterexample"] for r in rows)}

    out = {
        "prng": PRNG, "master_seed": master_seed, "eps": eps,
        "convex_series": {"trials": len(series), "failures": sum(not r["passed"] for r in series)},
        "operator_tail": summary(op), "bilinear_tail": summary(bil),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    out["failures"] = (out["convex_series"]["failures"] + out["operator_tail"]["certified_counterexamples"]
                       + out["bilinear_tail"]["certified_counterexamples"])
    return out
