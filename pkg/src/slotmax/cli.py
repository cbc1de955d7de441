"""Command-line interface.

Subcommands: ``run`` (one algorithm, one row), ``sweep`` (vary k, theta or
lambda across values and optionally several algorithms), ``gen`` (synthetic
instance files), ``oracle`` (exhaustive optimum on small instances).

Exit codes: 0 success, 1 input/validation error, 2 internal-invariant
violation.
"""

from __future__ import annotations

import argparse
import sys

from .errors import InternalInvariantError, ValidationError
from .pipelines import ALGORITHMS, RunConfig, run, sweep, write_rows
from .synth import generate_synthetic


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--billboards", required=True)
    p.add_argument("--trajectories", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--theta", type=float, default=0.2)
    p.add_argument("--lambda-m", type=float, default=100.0, dest="lambda_m")
    p.add_argument("--delta-min", type=int, default=5, dest="delta_minutes")
    p.add_argument("--t-start", type=int, default=0)
    p.add_argument("--t-end", type=int, default=1440)
    p.add_argument("--h", type=float, default=8.0)
    p.add_argument("--ell", type=float, default=8.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--embed-timing", action="store_true",
                   help="write measured wall-clock into the CSV (makes the "
                        "output time-dependent rather than byte-reproducible)")
    p.add_argument("--out", required=True)


def _config(args, algorithm: str, reps: int) -> RunConfig:
    return RunConfig(
        algorithm=algorithm, k=args.k, billboards=args.billboards,
        trajectories=args.trajectories, out=args.out, theta=args.theta,
        lambda_m=args.lambda_m, delta_minutes=args.delta_minutes,
        t_start=args.t_start, t_end=args.t_end, h=args.h, ell=args.ell,
        seed=args.seed, reps=reps, embed_timing=args.embed_timing,
        workers=args.workers, dump_partition=getattr(args, "dump_partition", None),
    )


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; remap to the validation
    # path so exit code 2 stays reserved for internal-invariant violations
    def error(self, message):
        raise ValidationError(message)


def _parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slotmax",
                     description="influential billboard slot selection")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one selection algorithm")
    p_run.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    p_run.add_argument("--reps", type=int, default=1)
    p_run.add_argument("--dump-partition", default=None,
                       help="prefix for partition membership/summary CSVs")
    _add_run_options(p_run)

    p_sweep = sub.add_parser("sweep", help="sweep one parameter across values")
    p_sweep.add_argument("--algorithm", default="greedy", choices=ALGORITHMS)
    p_sweep.add_argument("--algorithms", default=None,
                         help="comma-separated list overriding --algorithm")
    p_sweep.add_argument("--vary", required=True, choices=("k", "theta", "lambda"))
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated parameter values")
    p_sweep.add_argument("--reps", type=int, default=3)
    _add_run_options(p_sweep)

    p_gen = sub.add_parser("gen", help="generate a synthetic instance")
    p_gen.add_argument("--billboards", required=True)
    p_gen.add_argument("--trajectories", required=True)
    p_gen.add_argument("--n-billboards", type=int, required=True)
    p_gen.add_argument("--n-users", type=int, required=True)
    p_gen.add_argument("--records-per-user", type=int, default=3)
    p_gen.add_argument("--horizon", type=int, default=240)
    p_gen.add_argument("--delta", type=int, default=5)
    p_gen.add_argument("--geo-box", default="40.60,-74.05,40.90,-73.70",
                       help="lat_min,lon_min,lat_max,lon_max")
    p_gen.add_argument("--panel-range", default="100,1000")
    p_gen.add_argument("--hotspots", type=int, default=0)
    p_gen.add_argument("--seed", type=int, default=0)

    p_oracle = sub.add_parser("oracle", help="exhaustive optimum (small instances)")
    _add_run_options(p_oracle)

    return parser


def _numbers(text: str, flag: str, cast, expect: int | None = None):
    try:
        values = [cast(x) for x in text.split(",")]
    except ValueError:
        raise ValidationError(f"{flag} expects comma-separated numbers, got {text!r}") from None
    if expect is not None and len(values) != expect:
        raise ValidationError(f"{flag} needs {expect} comma-separated numbers")
    return values


def _dispatch(args) -> int:
    if args.command == "gen":
        box = tuple(_numbers(args.geo_box, "--geo-box", float, 4))
        lo, hi = _numbers(args.panel_range, "--panel-range", float, 2)
        generate_synthetic(args.billboards, args.trajectories, args.n_billboards,
                           args.n_users, args.records_per_user, args.horizon,
                           args.delta, box, (lo, hi), args.seed, args.hotspots)
        return 0

    if args.command == "run":
        config = _config(args, args.algorithm, args.reps)
        row = run(config)
        write_rows(args.out, config, [row])
        print(f"{config.algorithm}: influence {row.influence:.6g} "
              f"({row.runtime_ms} ms selection)", file=sys.stderr)
        return 0

    if args.command == "oracle":
        config = _config(args, "brute_force", 1)
        row = run(config)
        write_rows(args.out, config, [row])
        print(f"optimum: influence {row.influence:.6g}", file=sys.stderr)
        return 0

    # sweep
    algorithms = args.algorithms.split(",") if args.algorithms else [args.algorithm]
    config = _config(args, algorithms[0], args.reps)
    values = _numbers(args.values, "--values", int if args.vary == "k" else float)
    rows = sweep(config, args.vary, values, algorithms)
    write_rows(args.out, config, rows)
    failures = sum(1 for r in rows if r.error)
    print(f"sweep wrote {len(rows)} rows ({failures} failed cells)", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
        return _dispatch(args)
    except InternalInvariantError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
