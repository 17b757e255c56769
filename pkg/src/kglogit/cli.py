"""Command-line entry point: batch simulation, data generation, dataset
fitting, and the live advisor server.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.
All randomness flows from --seed (default 0, never wall-clock).
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

import numpy as np

from .belief import ConvergenceError
from .dataio import (
    DatasetError,
    load_csv,
    rows_from_result,
    simulate_truth_from_dataset,
    write_dataset,
    write_results,
)
from .policies import PolicyKind
from .service import AdvisorService, make_server
from .simulate import ExperimentConfig, gen_synthetic_pool, run_experiment

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="kglogit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="benchmark policies by opportunity cost")
    src = sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--synthetic", action="store_true", help="generate the pool per replication")
    src.add_argument("--dataset", metavar="CSV", help="use a labeled CSV as the pool")
    sim.add_argument("--d", type=int, default=10, help="feature dimension (synthetic)")
    sim.add_argument("--M", type=int, default=100, help="pool size (synthetic)")
    sim.add_argument("--N", type=int, default=30, help="measurement budget")
    sim.add_argument("--reps", type=int, default=100, help="replication count")
    sim.add_argument("--lambda", dest="lam", type=float, default=1.0, help="prior precision")
    sim.add_argument(
        "--policies", default="kg,random,uncertain", help="comma list of kg,random,uncertain"
    )
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="results CSV path")
    sim.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                     help="parallel replication workers")
    sim.add_argument("--no-intercept", action="store_true", help="skip intercept augmentation")
    sim.add_argument("--label-column", default="label", help="label column name (dataset)")
    sim.add_argument("--scale", choices=("none", "minmax"), default="none",
                     help="per-feature scaling (dataset)")
    sim.add_argument("--fit-lambda", type=float, default=1.0,
                     help="regularization for the dataset truth fit")
    sim.add_argument("--perturb", type=float, default=0.1,
                     help="std of the dataset truth perturbation")

    gen = sub.add_parser("gen-data", help="write a synthetic pool CSV")
    gen.add_argument("--d", type=int, required=True)
    gen.add_argument("--M", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    fit = sub.add_parser("fit", help="fit a dataset and write perturbed truth weights")
    fit.add_argument("--dataset", required=True)
    fit.add_argument("--lambda", dest="lam", type=float, default=1.0)
    fit.add_argument("--perturb", type=float, default=0.1)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", required=True)
    fit.add_argument("--label-column", default="label")
    fit.add_argument("--scale", choices=("none", "minmax"), default="none")

    srv = sub.add_parser("serve", help="run the live advisor HTTP service")
    srv.add_argument("--port", type=int, default=8080)
    srv.add_argument("--bind", default="127.0.0.1")
    srv.add_argument("--static", default=None, help="directory of dashboard assets to serve at /")

    return parser


def _cmd_simulate(args) -> int:
    tokens = [t for t in args.policies.split(",") if t.strip()]
    if not tokens:
        print("kglogit simulate: error: --policies must name at least one policy", file=sys.stderr)
        return EXIT_USAGE
    try:
        policies = tuple(PolicyKind.parse(t) for t in tokens)
    except ValueError as exc:
        print(f"kglogit simulate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.N < 1:
        print("kglogit simulate: error: --N must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.threads < 1:
        print("kglogit simulate: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = ExperimentConfig(
            M=args.M,
            d=args.d,
            N=args.N,
            reps=args.reps,
            lam=args.lam,
            policies=policies,
            seed=args.seed,
            source="synthetic" if args.synthetic else args.dataset,
            intercept=not args.no_intercept,
            fit_lambda=args.fit_lambda,
            perturb_sigma=args.perturb,
            label_column=args.label_column,
            scale=args.scale,
        )
    except ValueError as exc:
        print(f"kglogit simulate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    result = run_experiment(config, workers=args.threads)
    write_results(rows_from_result(result), args.out)

    names = [p.value for p in config.policies]
    print(f"mean opportunity cost per step over {config.reps} replication(s)")
    print("step" + "".join(f"{name:>12}" for name in names))
    for n in range(config.N):
        cells = "".join(f"{result.mean_oc[p][n]:>12.6f}" for p in config.policies)
        print(f"{n + 1:>4}{cells}")
    print(f"results written to {args.out}")
    return EXIT_OK


def _cmd_gen_data(args) -> int:
    if args.d < 1 or args.M < 1:
        print("kglogit gen-data: error: --d and --M must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    rng = np.random.default_rng(args.seed & ((1 << 64) - 1))
    pool = gen_synthetic_pool(args.M, args.d, rng, intercept=False)
    feats = np.stack([alt.features for alt in pool])
    write_dataset(args.out, feats)
    print(f"wrote {args.M} alternatives of dimension {args.d} to {args.out}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    dataset = load_csv(args.dataset, label_column=args.label_column, intercept=True,
                       scale=args.scale)
    rng = np.random.default_rng(args.seed & ((1 << 64) - 1))
    truth = simulate_truth_from_dataset(dataset, args.lam, args.perturb, rng)
    with open(args.out, "w", newline="\n") as fh:
        for w in truth.w_star:
            fh.write(repr(float(w)) + "\n")
    print(f"wrote {truth.w_star.size} weights to {args.out}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    try:
        server = make_server(AdvisorService(), bind=args.bind, port=args.port,
                             static_dir=args.static)
    except OSError as exc:
        print(f"kglogit serve: error: cannot bind {args.bind}:{args.port}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    host, port = server.server_address[:2]
    print(f"advisor listening on http://{host}:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "gen-data":
            return _cmd_gen_data(args)
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "serve":
            return _cmd_serve(args)
    except DatasetError as exc:
        print(f"kglogit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConvergenceError as exc:
        print(f"kglogit: fit did not converge: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"kglogit: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
