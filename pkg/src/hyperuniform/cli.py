"""Command-line interface.

Exit codes: 0 success or check passed, 1 check failed, 2 usage or input
error, 3 numerical error (coincident points, non positive definite Gram
matrix, incompatible objective settings).
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .checks import CHECKS
from .diagnostics import diagnose
from .errors import DomainError, HyperUniformError, IncompatibleObjective, NumericalError
from .io import (
    atomic_write_text,
    configuration_csv,
    load_experiment,
    read_configuration,
    trajectory_csv,
    write_configuration,
    write_report,
)
from .optimizer import multistart, restart_initials
from .reference import cross_polytope, regular_simplex
from .sphere import sample_uniform
from .uniformity import SobolevSpec, ajne, circle_angles, range_test, rayleigh, sobolev

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


def _initials(cfg):
    kind = cfg.init["kind"]
    if kind == "uniform":
        return restart_initials(cfg.n, cfg.d, int(cfg.init["seed"]), cfg.restarts)
    if kind == "file":
        x = read_configuration(cfg.init["path"])
    elif kind == "simplex":
        x = regular_simplex(cfg.n, cfg.d)
    else:
        x = cross_polytope(cfg.d)
    if x.shape != (cfg.n, cfg.d):
        raise DomainError(f"initial configuration has shape {x.shape}, config says ({cfg.n}, {cfg.d})")
    return [x] * cfg.restarts


def cmd_optimize(args) -> int:
    cfg = load_experiment(args.config)
    res = multistart(cfg.objective, cfg.optimizer, _initials(cfg), workers=args.workers)
    best = res.best
    atomic_write_text(cfg.outputs["trajectory_csv"], trajectory_csv(best))
    write_configuration(cfg.outputs["final_json"], best.final)
    body = {
        "best_restart": res.best_index,
        "final_values": res.final_values,
        "errors": res.errors,
        "final_record": dict(zip(("iter", "objective", "energy_s2", "separation_geodesic", "masscenter_norm"),
                                 best.final_record.as_tuple())),
    }
    if cfg.n >= 2:
        body["diagnostics"] = diagnose(best.final, args.oracle_samples, cfg.optimizer.seed).to_dict()
    write_report(cfg.outputs["report_json"], "optimize", body, cfg.to_dict(), cfg.optimizer.seed)
    return EXIT_OK


def cmd_sample(args) -> int:
    x = sample_uniform(args.n, args.d, seed=args.seed)
    if args.output == "-":
        sys.stdout.write(configuration_csv(x))
    else:
        write_configuration(args.output, x)
    return EXIT_OK


def uniformity_report(x) -> dict:
    n, d = x.shape
    out = {
        "n": n,
        "d": d,
        "ajne": ajne(x) if n >= 2 else None,
        "rayleigh": rayleigh(x),
        "range": range_test(circle_angles(x)) if d == 2 and n >= 2 else None,
        "sobolev": None,
    }
    if d > 2:
        spec = SobolevSpec.ajne(d)
        out["sobolev"] = {"K": spec.K, "weights": "ajne", "value": sobolev(x, spec)}
    return out


def cmd_test(args) -> int:
    x = read_configuration(args.input)
    report = write_report(args.output, "test", uniformity_report(x), {"input": args.input}, None)
    if args.output is None:
        print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_oracle(args) -> int:
    passed, details = CHECKS[args.check](seed=args.seed)
    out = args.output or f"oracle_{args.check}.json"
    write_report(out, "oracle", {"check": args.check, "passed": bool(passed), "details": details},
                 {"check": args.check}, args.seed)
    print(f"{args.check}: {'PASS' if passed else 'FAIL'} (report: {out})")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_diagnose(args) -> int:
    x = read_configuration(args.input)
    rep = diagnose(x, args.oracle_samples, args.seed)
    report = write_report(args.output, "diagnose", rep.to_dict(), {"input": args.input}, args.seed)
    if args.output is None:
        print(json.dumps(report, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperuniform", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    o = sub.add_parser("optimize", help="run an experiment described by a JSON config")
    o.add_argument("--config", required=True)
    o.add_argument("--workers", type=int, default=None, help="process pool size for restarts")
    o.add_argument("--oracle-samples", type=int, default=10_000)
    o.set_defaults(func=cmd_optimize)

    s = sub.add_parser("sample", help="write a uniform random configuration")
    s.add_argument("-n", type=int, required=True)
    s.add_argument("-d", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", "-o", default="-", help="CSV or JSON path; '-' for CSV on stdout")
    s.set_defaults(func=cmd_sample)

    t = sub.add_parser("test", help="uniformity statistics of a configuration")
    t.add_argument("--input", required=True)
    t.add_argument("--output", default=None)
    t.set_defaults(func=cmd_test)

    c = sub.add_parser("oracle", help="run a named check against known results")
    c.add_argument("--check", required=True, choices=sorted(CHECKS))
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--output", default=None)
    c.set_defaults(func=cmd_oracle)

    g = sub.add_parser("diagnose", help="quality measures of a configuration")
    g.add_argument("--input", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--oracle-samples", type=int, default=10_000)
    g.add_argument("--output", default=None)
    g.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NumericalError, IncompatibleObjective) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (HyperUniformError, OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
