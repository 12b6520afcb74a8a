"""Command-line front end.

Exit codes: 0 success, 1 a checked predicate failed, 2 bad arguments or a
domain error, 3 an input/output error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .errors import GiantWalkError
from .exploration import (
    component_sizes,
    martingale_series,
    run_walk,
    summarize_replica,
    write_trajectory_csv,
)
from .harness import ExperimentConfig, run_experiment, validate
from .sampler import ALGORITHM_ID, seed_stream
from .stats import histogram, write_histogram_csv
from .theory import Params, theory_values

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_DOMAIN = 2
EXIT_IO = 3

MAX_SIMULATE_N = 10**7
SEED_ENV = "GIANTWALK_SEED"


class _IOFailure(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw, 0)
    except ValueError:
        raise GiantWalkError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _params(args) -> Params:
    if getattr(args, "p", None) is not None:
        return Params.from_p(args.n, args.p)
    return Params.from_lambda(args.n, args.lam)


def _open_for_writing(path):
    try:
        return open(path, "w", newline="")
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc.strerror or exc}") from exc


def _write_text(path, text: str) -> None:
    with _open_for_writing(path) as fh:
        fh.write(text)


def _table(rows) -> str:
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def cmd_theory(args) -> int:
    params = Params.from_lambda(args.n, args.lam)
    tv = theory_values(params)
    payload = {"version": __version__, "n": params.n, "lambda": params.lam, **tv.as_dict()}
    if args.json:
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print(_table([(k, format(v, ".10g")) for k, v in tv.as_dict().items()]))
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.n > MAX_SIMULATE_N:
        raise GiantWalkError(f"simulate is limited to n <= {MAX_SIMULATE_N}")
    params = _params(args)
    seed = args.seed if args.seed is not None else _default_seed()
    with _open_for_writing(args.out):
        pass
    stream = seed_stream(seed, 0)
    traj = run_walk(params, stream)
    series = martingale_series(traj)
    try:
        write_trajectory_csv(traj, args.out, series)
    except OSError as exc:
        raise _IOFailure(f"cannot write {args.out}: {exc}") from exc

    try:
        summary = summarize_replica(traj, theory_values(params), series)
    except GiantWalkError:
        # no supercritical theory (e.g. p forced to 0): only sizes are meaningful
        sizes = component_sizes(traj)
        fields = {"L1": sizes[0], "L2": sizes[1] if len(sizes) > 1 else 0,
                  "components": len(sizes), "T0": "NA", "T1": "NA", "Z": "NA"}
    else:
        fields = {"L1": summary.L1, "L2": summary.L2, "components": summary.component_count,
                  "T0": summary.T0, "T1": summary.T1, "Z": summary.Z}
    fields.update(seed=seed, rng=ALGORITHM_ID)
    print(" ".join(f"{k}={v}" for k, v in fields.items()))
    return EXIT_OK


def cmd_mc(args) -> int:
    params = _params(args)
    seed = args.seed if args.seed is not None else _default_seed()
    config = ExperimentConfig(
        params=params,
        replicas=args.replicas,
        master_seed=seed,
        mode="mc",
        worker_count=args.workers,
        variance_tolerance=args.variance_tol,
    )
    for path in (args.json, args.csv, args.hist):
        if path:
            with _open_for_writing(path):
                pass
    report = run_experiment(config)
    if args.json:
        _write_text(args.json, report.to_json())
    if args.csv:
        try:
            report.write_replica_csv(args.csv)
        except OSError as exc:
            raise _IOFailure(str(exc)) from exc
    if args.hist:
        try:
            write_histogram_csv(histogram(report.standardized_sample(), args.bins), args.hist)
        except OSError as exc:
            raise _IOFailure(str(exc)) from exc

    rows = [
        ("n", params.n), ("lambda", params.lam), ("replicas", config.replicas),
        ("seed", seed), ("rng", ALGORITHM_ID),
        ("rho*n", format(report.theory["t1"], ".10g")),
        ("sigma", format(report.theory["sigma"], ".10g")),
        ("mean L1", format(report.L1_moments.mean, ".10g")),
        ("mean_offset", format(report.mean_offset, ".4g")),
        ("variance_ratio", format(report.variance_ratio, ".4g")),
        ("standardized_ks", format(report.standardized_ks, ".4g")),
        ("T1_containment", format(report.T1_containment_fraction, ".4g")),
        ("Z_bound_fraction", format(report.Z_bound_fraction, ".4g")),
        ("condvar_ratio_median", format(report.condvar_ratio_median, ".6g")),
        ("L2_max", report.L2_max),
        ("runtime_s", format(report.runtime_seconds, ".3g")),
    ]
    rows += [(f"pass:{k}", v) for k, v in report.pass_flags.items()]
    print(_table(rows))
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_validate(args) -> int:
    if args.p is None and args.lam is None:
        raise GiantWalkError("validate needs --p or --lambda")
    params = _params(args)
    seed = args.seed if args.seed is not None else _default_seed()
    config = ExperimentConfig(
        params=params,
        replicas=args.replicas,
        master_seed=seed,
        mode="validate_enum" if args.mode == "enum" else "validate_graph",
        worker_count=args.workers,
    )
    if args.json:
        with _open_for_writing(args.json):
            pass
    report = validate(config)
    if args.json:
        _write_text(args.json, report.to_json())
    rows = [("mode", config.mode), ("n", params.n), ("p", format(params.p, ".10g")),
            ("replicas", config.replicas), ("seed", seed), ("method", report.method),
            ("statistic", format(report.statistic, ".6g"))]
    rows += [(k, format(v, ".6g") if isinstance(v, float) else v) for k, v in report.threshold.items()]
    if report.p_value is not None:
        rows.append(("p_value", format(report.p_value, ".6g")))
    rows.append(("passed", report.passed))
    print(_table(rows))
    return EXIT_OK if report.passed else EXIT_FAILED


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="giantwalk",
        description="Giant component of G(n, lambda/n) via the exploration random walk.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="closed-form constants for given lambda and n")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--n", type=_positive_int, default=100_000)
    p.add_argument("--json", action="store_true", help="print JSON instead of a table")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("simulate", help="run one walk and dump its trajectory as CSV")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--p", type=float, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mc", help="Monte Carlo check of the normal limit of L1")
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--replicas", type=_positive_int, default=1000)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--json", default=None, metavar="OUT", help="write the report as JSON")
    p.add_argument("--csv", default=None, metavar="OUT", help="write per-replica rows as CSV")
    p.add_argument("--hist", default=None, metavar="OUT",
                   help="write a histogram of standardized L1 as CSV")
    p.add_argument("--bins", type=_positive_int, default=40)
    p.add_argument("--variance-tol", type=float, default=0.1)
    p.add_argument("--p", type=float, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("validate", help="compare the walk against an independent oracle")
    p.add_argument("--mode", choices=("enum", "graph"), required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--p", type=float, default=None)
    group.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--replicas", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--json", default=None, metavar="OUT")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("simulate", "mc") and args.lam is None and args.p is None:
        parser.error(f"{args.command} needs --lambda")
    try:
        return args.func(args)
    except _IOFailure as exc:
        print(f"giantwalk: {exc}", file=sys.stderr)
        return EXIT_IO
    except GiantWalkError as exc:
        print(f"giantwalk: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
