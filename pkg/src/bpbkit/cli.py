"""Command line entry point: ``bpbkit <subcommand> ...``.

Exit codes: 0 contract satisfied, 2 premise violated, 3 contract breach.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import moduli
from .harness import (ExperimentConfig, eta_tightness_search, generate_instance,
                      instance_from_dict, lemma_validation_suite, run_experiment, write_report,
                      _json_default)
from .operators import Budget
from .pipelines import ContractBreach, PremiseViolation, run_pipeline
from .spaces import SpaceDesc

EXIT_OK, EXIT_PREMISE, EXIT_BREACH = 0, 2, 3


def _load_json(arg: str) -> dict:
    """Inline JSON or a path to a JSON file."""
    if os.path.exists(arg):
        with open(arg) as fh:
            return json.load(fh)
    return json.loads(arg)


def _emit(obj, out: str | None):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _parse_p(s: str) -> float:
    return math.inf if s.lower() in ("inf", "infinity") else float(s)


def cmd_moduli(args) -> int:
    if args.space:
        field, p, dim = args.space.split(",")
        args.field, args.p, args.dim = field, p, int(dim)
    space = SpaceDesc(args.field, _parse_p(args.p), args.dim)
    rows = []
    for eps in args.eps:
        if args.kind == "convexity":
            b = moduli.delta_convexity_bracket(space, eps, args.resolution)
        else:
            b = moduli.delta_complex_bracket(space, eps, args.resolution)
        rows.append(b.to_dict())
    _emit({"space": {"field": space.field, "p": args.p, "dim": space.dim}, "kind": args.kind,
           "brackets": rows}, args.out)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    data = _load_json(args.instance)
    M, point = instance_from_dict(data)
    eps = args.eps if args.eps is not None else data.get("eps")
    if eps is None:
        print("error: --eps is required when the instance has no eps", file=sys.stderr)
        return EXIT_PREMISE
    budget = Budget.from_dict(_load_json(args.budget)) if args.budget else Budget()
    try:
        cert = run_pipeline(args.command, M, point, float(eps), budget)
    except PremiseViolation as exc:
        _emit({"status": "premise-violated", "detail": str(exc)}, args.out)
        return EXIT_PREMISE
    except ContractBreach as exc:
        _emit({"status": "breach", "step": exc.step, "detail": str(exc)}, args.out)
        return EXIT_BREACH
    except ValueError as exc:
        _emit({"status": "premise-violated", "detail": str(exc)}, args.out)
        return EXIT_PREMISE
    _emit(cert.to_dict(), args.out)
    return EXIT_OK if cert.passed else EXIT_BREACH


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_dict(_load_json(args.config))
    report = run_experiment(cfg, workers=args.workers)
    if args.out:
        write_report(report, args.out)
    print(json.dumps(report["summary"], indent=2, sort_keys=True, default=_json_default))
    statuses = report["summary"]["by_status"]
    if statuses.get("breach") or statuses.get("error"):
        return EXIT_BREACH
    if statuses.get("premise-violated") or statuses.get("skipped"):
        return EXIT_PREMISE
    return EXIT_OK


def cmd_validate(args) -> int:
    report = lemma_validation_suite(args.seed, args.series_trials, args.tail_trials, args.eps)
    _emit(report, args.out)
    return EXIT_BREACH if report["failures"] else EXIT_OK


def cmd_eta_search(args) -> int:
    cfg = ExperimentConfig.from_dict(_load_json(args.config))
    _emit(eta_tightness_search(cfg, args.eps), args.out)
    return EXIT_OK


def cmd_generate(args) -> int:
    cfg = ExperimentConfig.from_dict(_load_json(args.config))
    inst = generate_instance(cfg, args.trial, args.eps)
    _emit(inst.to_dict() | ({"skipped": inst.skipped} if inst.skipped else {}), args.out)
    return EXIT_PREMISE if inst.skipped else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bpbkit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    m = sub.add_parser("moduli", help="bracket a modulus of convexity")
    m.add_argument("--space", help="field,p,dim, e.g. complex,1,2 (overrides the three flags)")
    m.add_argument("--kind", choices=("convexity", "complex"), default="convexity")
    m.add_argument("--field", choices=("real", "complex"), default="real")
    m.add_argument("--p", default="2")
    m.add_argument("--dim", type=int, default=2)
    m.add_argument("--eps", type=float, nargs="+", required=True)
    m.add_argument("--resolution", type=float, default=None)
    m.add_argument("--out")
    m.set_defaults(func=cmd_moduli)

    for name, what in (("bpb-op", "operator correction (new point)"),
                       ("bpb-local", "operator correction at the given point"),
                       ("bpb-bilinear", "bilinear correction (new points)"),
                       ("bpb-bilinear-local", "bilinear correction at the given points")):
        p = sub.add_parser(name, help=what)
        p.add_argument("--instance", required=True, help="instance JSON file")
        p.add_argument("--eps", type=float)
        p.add_argument("--budget", help="budget JSON (inline or file)")
        p.add_argument("--out")
        p.set_defaults(func=cmd_pipeline)

    e = sub.add_parser("experiment", help="run a seeded batch; writes <out>.json and <out>.csv")
    e.add_argument("--config", required=True)
    e.add_argument("--out")
    e.add_argument("--workers", type=int, default=1)
    e.set_defaults(func=cmd_experiment)

    v = sub.add_parser("validate-lemmas", help="convex-series and tail-bound validations")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--series-trials", type=int, default=1000)
    v.add_argument("--tail-trials", type=int, default=100)
    v.add_argument("--eps", type=float, default=0.5)
    v.add_argument("--out")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("eta-search", help="heuristic search for the largest workable margin")
    s.add_argument("--config", required=True)
    s.add_argument("--eps", type=float)
    s.add_argument("--out")
    s.set_defaults(func=cmd_eta_search)

    g = sub.add_parser("generate", help="write one generated instance")
    g.add_argument("--config", required=True)
    g.add_argument("--trial", type=int, default=0)
    g.add_argument("--eps", type=float)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "resolution", "unset") is None:
        args.resolution = 1e-2 if args.kind == "convexity" else 2e-2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
